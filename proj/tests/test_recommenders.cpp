#include <cmath>
#include <set>

#include <gtest/gtest.h>

#include "bheisr/recommenders.hpp"
#include "bheisr/simulate.hpp"
#include "bheisr/synth.hpp"

using namespace bheisr;

namespace {

Corpus ten_items() {
  std::vector<Item> items;
  Taxonomy tax{{"A", {"A/x"}}, {"B", {"B/x"}}};
  for (int i = 0; i < 10; ++i)
    items.push_back(make_dataset_item("i" + std::to_string(i), i < 5 ? "A" : "B", i < 5 ? "A/x" : "B/x",
                                      "item " + std::to_string(i)));
  std::vector<Interaction> xs = {{"u", "i0", 0, 1}, {"u", "i7", 1, 1}};
  return Corpus(items, xs, tax, {"u"}, SignalKind::click);
}

std::set<std::string> ids(const std::vector<const Item*>& v) {
  std::set<std::string> out;
  for (const Item* it : v) out.insert(it->id);
  return out;
}

std::vector<std::string> ids(const Feed& f) {
  std::vector<std::string> out;
  for (const auto& it : f.items) out.push_back(it.id);
  return out;
}

}  // namespace

TEST(Random, DeterministicAndExcludesAccepted) {
  const Corpus c = ten_items();
  const BeliefNetwork n = build_from_history(c, "u");
  RngStream a(42), b(42);
  const auto x = rd_candidates(c, n, 5, a), y = rd_candidates(c, n, 5, b);
  EXPECT_EQ(ids(x.items), ids(y.items));
  EXPECT_EQ(x.items.size(), 5u);
  EXPECT_FALSE(ids(x.items).count("i0"));
  EXPECT_FALSE(ids(x.items).count("i7"));
  RngStream r(1);
  const auto all = rd_candidates(c, n, 20, r);
  EXPECT_TRUE(all.short_pool);
  EXPECT_EQ(all.items.size(), 8u);
}

TEST(Random, UniformOverItems) {
  const Corpus c = ten_items();
  const BeliefNetwork cold("v", c.categories());
  std::map<std::string, int> hits;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    RngStream r(combine_seed(99, s));
    ++hits[rd_candidates(c, cold, 1, r).items.front()->id];
  }
  ASSERT_EQ(hits.size(), 10u);
  const double sd = std::sqrt(10000 * 0.1 * 0.9);
  for (const auto& [id, h] : hits) EXPECT_NEAR(h, 1000.0, 3 * sd) << id;
}

TEST(ContentBased, Cosine) {
  std::vector<FeatureVector::Entry> e{{0, 1.0}, {3, 2.0}};
  const FeatureVector v(e), w(std::vector<FeatureVector::Entry>{{1, 1.0}});
  EXPECT_NEAR(cb_score(v, v), 1.0, 1e-12);
  EXPECT_EQ(cb_score(v, w), 0.0);
  EXPECT_EQ(cb_score(v, FeatureVector()), 0.0);
}

TEST(ContentBased, ProfileIsMeanOfAccepted) {
  const Corpus c = ten_items();
  const BeliefNetwork n = build_from_history(c, "u");
  auto vocab = std::make_shared<Vocabulary>(Vocabulary::from_corpus(c));
  const TfidfEmbedder embed(vocab);
  std::vector<FeatureVector> vecs;
  for (const auto& it : c.items()) vecs.push_back(embed.embed(it));
  const std::map<std::string, FeatureVector> none;
  const std::map<std::string, BeliefNetwork> snap{{"u", n}};
  const RecContext ctx{c, vecs, none, snap};
  const FeatureVector p = user_profile(n, ctx);
  for (std::uint32_t t = 0; t < vocab->size(); ++t)
    EXPECT_NEAR(p.get(t), (vecs[0].get(t) + vecs[7].get(t)) / 2, 1e-12);
  EXPECT_NEAR(cb_score(c.item("i0"), n, ctx), correlation(vecs[0], p), 1e-12);
}

TEST(UserBased, MatchesBruteForce) {
  const std::vector<std::string> cats{"A", "B", "C"};
  std::map<std::string, BeliefNetwork> snap;
  snap.emplace("u1", BeliefNetwork("u1", cats));
  snap.emplace("u2", BeliefNetwork("u2", cats));
  snap.emplace("u3", BeliefNetwork("u3", cats));
  snap.at("u1").add_clicks("A", "A/x", 3);
  snap.at("u1").add_clicks("B", "B/x", 1);
  snap.at("u1").add_clicks("B", "B/y", 1);
  snap.at("u2").add_clicks("A", "A/x", 1);
  snap.at("u2").add_clicks("C", "C/x", 2);
  snap.at("u3").add_clicks("B", "B/y", 4);
  const Item a = make_dataset_item("ia", "A", "A/x", "a");
  const Item b = make_dataset_item("ib", "B", "B/y", "b");
  const Item z = make_dataset_item("iz", "B", "B/x", "z");
  snap.at("u2").update_on_feedback(a, true);
  snap.at("u3").update_on_feedback(a, true);
  snap.at("u3").update_on_feedback(b, true);
  snap.at("u1").update_on_feedback(z, true);
  const UcIndex index(snap);

  auto mass_cos = [&](const std::string& x, const std::string& y) {
    double d = 0, nx = 0, ny = 0;
    for (const auto& c : cats) {
      const double p = snap.at(x).category_mass(c), q = snap.at(y).category_mass(c);
      d += p * q, nx += p * p, ny += q * q;
    }
    return d / std::sqrt(nx * ny);
  };
  auto oracle = [&](const Item& it, const std::string& u) {
    double sim = 0;
    for (const auto& [v, n] : snap)
      if (v != u && n.has_accepted(it.id)) sim += mass_cos(u, v);
    const BeliefNetwork& me = snap.at(u);
    double share = 0;
    for (const auto& [c, w] : it.category_weights) share += w * me.belief_degree(c);
    return sim * share / me.belief_sum();
  };
  for (const Item* it : {&a, &b, &z})
    for (const auto& u : {"u1", "u2", "u3"})
      EXPECT_NEAR(uc_score(*it, u, snap.at(u), index), oracle(*it, u), 1e-12) << it->id << u;
  // only u1 itself accepted iz
  EXPECT_EQ(uc_score(z, "u1", snap.at("u1"), index), 0.0);
  EXPECT_GT(uc_score(a, "u1", snap.at("u1"), index), 0.0);
}

class Assemble : public ::testing::Test {
 protected:
  void SetUp() override {
    SynthSpec spec;
    spec.n_users = 12;
    spec.n_items = 340;
    world = std::make_unique<World>(std::make_shared<Corpus>(synth_corpus(spec)));
    gen = std::make_unique<TemplateGenerator>(world->graph, *world->vocab);
    user = *world->corpus->users().begin();
    const auto cats = world->corpus->categories();
    session.user_id = user;
    for (std::size_t i = 0; i < 10; ++i) session.queue.push_back(PromptPath{{cats[i], cats[i + 1]}});
  }

  Feed feed(Model m, double w, NudgeSession* s = nullptr, const std::string& who = "") {
    const RecContext ctx{*world->corpus, world->item_vectors, gen_vectors, world->networks};
    const UcIndex uc(world->networks);
    return assemble_feed({m, w, 10, 1}, who.empty() ? user : who, ctx, &uc, s, gen.get(), 5);
  }

  std::unique_ptr<World> world;
  std::unique_ptr<TemplateGenerator> gen;
  std::map<std::string, FeatureVector> gen_vectors;
  std::string user;
  NudgeSession session;
};

TEST_F(Assemble, MixRatio) {
  for (const auto& [w, orig] : std::vector<std::pair<double, std::size_t>>{{0.0, 10}, {0.6, 4}, {1.0, 0}}) {
    NudgeSession s = session;
    const Feed f = feed(Model::cb_w, w, &s);
    EXPECT_EQ(f.items.size(), 10u);
    EXPECT_EQ(f.original_count, orig) << w;
    EXPECT_EQ(f.generated_count, 10 - orig) << w;
    for (std::size_t i = 0; i < f.items.size(); ++i)
      EXPECT_EQ(f.items[i].origin == Origin::generated, i >= orig);
  }
  NudgeSession s = session;
  EXPECT_EQ(feed(Model::bheisr, 0.2, &s).generated_count, 10u);
}

TEST_F(Assemble, GeneratedItemsFollowPendingPrompts) {
  NudgeSession s = session;
  const Feed f = feed(Model::rd_w, 0.4, &s);
  ASSERT_EQ(f.generated_count, 4u);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(f.items[6 + j].prompt_key, session.queue[j].key());
  EXPECT_EQ(s.queue.size(), session.queue.size());
}

TEST_F(Assemble, NoSessionMeansNoGenerated) {
  EXPECT_EQ(feed(Model::cb_w, 0.6).generated_count, 0u);
  NudgeSession s = session;
  s.terminal = true;
  EXPECT_EQ(feed(Model::uc_w, 0.6, &s).generated_count, 0u);
}

TEST_F(Assemble, ExcludesAccepted) {
  const BeliefNetwork& n = world->networks.at(user);
  for (Model m : {Model::rd, Model::cb, Model::uc})
    for (const auto& it : feed(m, 0).items) EXPECT_FALSE(n.has_accepted(it.id)) << to_string(m);
}

TEST_F(Assemble, CbIsTopByCosine) {
  const Feed f = feed(Model::cb, 0);
  const RecContext ctx{*world->corpus, world->item_vectors, gen_vectors, world->networks};
  const BeliefNetwork& n = world->networks.at(user);
  const double last = cb_score(f.items.back(), n, ctx);
  for (std::size_t i = 1; i < f.items.size(); ++i)
    EXPECT_GE(cb_score(f.items[i - 1], n, ctx), cb_score(f.items[i], n, ctx));
  for (const auto& it : world->corpus->items())
    if (!n.has_accepted(it.id) && std::find(f.items.begin(), f.items.end(), it) == f.items.end())
      EXPECT_LE(cb_score(it, n, ctx), last + 1e-15);
}

TEST_F(Assemble, ColdUserFallsBackToRandom) {
  world->networks.emplace("cold", BeliefNetwork("cold", world->corpus->categories()));
  const auto rd = ids(feed(Model::rd, 0, nullptr, "cold"));
  EXPECT_EQ(ids(feed(Model::cb, 0, nullptr, "cold")), rd);
  EXPECT_EQ(ids(feed(Model::uc, 0, nullptr, "cold")), rd);
}

TEST_F(Assemble, Repeatable) {
  for (Model m : all_models()) {
    NudgeSession s1 = session, s2 = session;
    EXPECT_EQ(feed(m, 0.6, &s1).items, feed(m, 0.6, &s2).items) << to_string(m);
  }
}

TEST_F(Assemble, RejectsBadArguments) {
  const RecContext ctx{*world->corpus, world->item_vectors, gen_vectors, world->networks};
  EXPECT_THROW(assemble_feed({Model::rd, 0.5, 0, 1}, user, ctx, nullptr, nullptr, nullptr, 1),
               PreconditionError);
  EXPECT_THROW(assemble_feed({Model::rd, 1.5, 10, 1}, user, ctx, nullptr, nullptr, nullptr, 1),
               PreconditionError);
  EXPECT_THROW(assemble_feed({Model::uc, 0.5, 10, 1}, user, ctx, nullptr, nullptr, nullptr, 1),
               PreconditionError);
}

TEST(Models, NamesRoundTrip) {
  for (Model m : all_models()) EXPECT_EQ(model_from_string(to_string(m)), m);
  EXPECT_THROW(model_from_string("nope"), std::exception);
  EXPECT_EQ(paired_baseline(Model::uc_w), Model::uc);
  EXPECT_EQ(paired_baseline(Model::cb), Model::cb);
}
