#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bheisr/belief.hpp"
#include "bheisr/corpus.hpp"
#include "bheisr/error.hpp"
#include "bheisr/fbdmr.hpp"
#include "bheisr/features.hpp"
#include "bheisr/generator.hpp"
#include "bheisr/nudge.hpp"
#include "bheisr/recommenders.hpp"
#include "bheisr/rng.hpp"

namespace bheisr {

// sum_C w_C B(C) / sum_n B(n); 0 for a cold user.
inline double acceptance_probability(const Item& item, const BeliefNetwork& net) {
  return belief_share(item, net);
}

struct Decision {
  std::string item_id;
  double ap = 0;
  double draw = 0;
  bool accepted = false;
};

// One uniform draw per call.
inline Decision decide(const Item& item, const BeliefNetwork& net, RngStream& rng) {
  Decision d{item.id, acceptance_probability(item, net), rng.next_uniform(), false};
  d.accepted = d.draw < d.ap;
  return d;
}

struct SimConfig {
  Model model = Model::cb_w;
  double w = 0.6;
  std::size_t k = 10;
  std::optional<std::size_t> theta = 2;  // nullopt: never penalize
  std::size_t feeds = 10;
  std::uint64_t seed = 1;
  std::vector<std::size_t> checkpoints;  // empty: default schedule
  std::vector<std::string> users;        // simulated users; empty: all
  std::size_t threads = 1;
  QueueDiscipline discipline = QueueDiscipline::front;
  bool track_fb = false;  // classify every step
  std::ostream* path_trace = nullptr;  // initial path exploration, JSON lines

  void validate() const {
    require(feeds >= 1, "feeds must be >= 1");
    require(w >= 0 && w <= 1, "w must be in [0,1]");
    require(k >= 1, "k must be >= 1");
    require(!theta || *theta >= 1, "theta must be >= 1");
  }
};

// Step 0 always; every feed when T <= 20, else every 10 feeds plus T.
inline std::vector<std::size_t> default_checkpoints(std::size_t T) {
  std::vector<std::size_t> out;
  const std::size_t every = T <= 20 ? 1 : 10;
  for (std::size_t t = 0; t <= T; t += every) out.push_back(t);
  if (out.back() != T) out.push_back(T);
  return out;
}

// Everything derived from the corpus before a run: features, the category
// graph, initial belief networks and their classification.
struct World {
  std::shared_ptr<const Corpus> corpus;
  std::shared_ptr<const Vocabulary> vocab;
  std::unique_ptr<TfidfEmbedder> embed;
  std::vector<FeatureVector> item_vectors;
  CategoryGraph graph;
  std::map<std::string, BeliefNetwork> networks;
  std::optional<Classification> classification;  // unset if too few warm users

  explicit World(std::shared_ptr<const Corpus> c) : corpus(std::move(c)) {
    vocab = std::make_shared<Vocabulary>(Vocabulary::from_corpus(*corpus));
    embed = std::make_unique<TfidfEmbedder>(vocab);
    item_vectors.reserve(corpus->items().size());
    for (const auto& it : corpus->items()) item_vectors.push_back(embed->embed(it));
    graph = CategoryGraph::build(*corpus, *embed);
    networks = build_all(*corpus);
    std::size_t warm = 0;
    for (const auto& [_, n] : networks) warm += !n.cold();
    if (warm >= kMinClassifiedUsers) classification = classify_users(networks, corpus->categories());
  }

  std::vector<std::string> fb_users() const {
    if (!classification) return {};
    return {classification->fb_users.begin(), classification->fb_users.end()};
  }

  const std::map<std::string, BeliefClass>& classes_of(const std::string& user) const {
    if (!classification) throw PreconditionError("population too small to classify");
    return classification->classes.at(user);
  }
};

struct UserStep {
  std::string user;
  Feed feed;
  std::vector<Decision> decisions;
  double coverage = 0;
  std::vector<std::string> notes;
};

struct StepRecord {
  std::size_t step = 0;
  std::vector<UserStep> users;
  std::optional<std::size_t> fb_count;
};

struct Checkpoint {
  std::size_t step = 0;
  std::map<std::string, std::map<std::string, double>> beliefs;
  std::map<std::string, std::map<std::string, double>> probs;
};

struct RunRecord {
  SimConfig config;
  std::vector<std::string> users;
  std::vector<StepRecord> steps;
  std::vector<Checkpoint> checkpoints;
  std::set<std::string> fb_before, fb_after;
  std::optional<std::size_t> fb_count_initial;
  std::map<std::string, std::string> initial_paths;  // user -> key
  std::map<std::string, std::size_t> reschedules;

  std::vector<double> coverage_series(const std::string& user) const {
    std::vector<double> out;
    for (const auto& s : steps)
      for (const auto& u : s.users)
        if (u.user == user) out.push_back(u.coverage);
    return out;
  }

  std::vector<Feed> feeds_of(const std::string& user) const {
    std::vector<Feed> out;
    for (const auto& s : steps)
      for (const auto& u : s.users)
        if (u.user == user) out.push_back(u.feed);
    return out;
  }
};

inline nlohmann::json feed_item_json(const Item& it) {
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& [c, w] : it.category_weights)
    if (w > 0) cats.push_back(c);
  return {{"id", it.id},
          {"origin", to_string(it.origin)},
          {"category", it.category},
          {"subcategory", it.subcategory},
          {"categories", cats}};
}

// One JSON line per (step, user) feed.
inline void write_feed_log(std::ostream& out, const RunRecord& r) {
  for (const auto& s : r.steps)
    for (const auto& u : s.users) {
      nlohmann::json items = nlohmann::json::array();
      for (const auto& it : u.feed.items) items.push_back(feed_item_json(it));
      out << nlohmann::json{{"step", s.step}, {"user", u.user}, {"items", items}}.dump() << '\n';
    }
}

inline nlohmann::json to_json(const RunRecord& r) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : r.steps) {
    nlohmann::json us = nlohmann::json::array();
    for (const auto& u : s.users) {
      nlohmann::json ds = nlohmann::json::array();
      for (const auto& d : u.decisions)
        ds.push_back({{"id", d.item_id}, {"ap", d.ap}, {"draw", d.draw}, {"accepted", d.accepted}});
      nlohmann::json ids = nlohmann::json::array();
      for (const auto& it : u.feed.items) ids.push_back(it.id);
      us.push_back({{"user", u.user},
                    {"feed", ids},
                    {"original_count", u.feed.original_count},
                    {"generated_count", u.feed.generated_count},
                    {"coverage", u.coverage},
                    {"decisions", ds},
                    {"notes", u.notes}});
    }
    nlohmann::json j = {{"step", s.step}, {"users", us}};
    if (s.fb_count) j["fb_count"] = *s.fb_count;
    steps.push_back(j);
  }
  nlohmann::json cps = nlohmann::json::array();
  for (const auto& c : r.checkpoints) {
    nlohmann::json snaps = nlohmann::json::array();
    for (const auto& [u, b] : c.beliefs)
      snaps.push_back({{"user_id", u}, {"belief", b}, {"probs", c.probs.at(u)}});
    cps.push_back({{"step", c.step}, {"networks", snaps}});
  }
  return {{"model", to_string(r.config.model)},
          {"w", r.config.w},
          {"k", r.config.k},
          {"feeds", r.config.feeds},
          {"seed", r.config.seed},
          {"users", r.users},
          {"initial_paths", r.initial_paths},
          {"reschedules", r.reschedules},
          {"steps", steps},
          {"checkpoints", cps},
          {"fb_before", r.fb_before},
          {"fb_after", r.fb_after}};
}

namespace sim_detail {

inline void check_network(const BeliefNetwork& n, std::size_t step) {
  if (n.cold()) return;
  double s = 0;
  for (const auto& [_, p] : n.click_probs()) s += p;
  if (std::abs(s - 1.0) > 1e-9)
    throw InvariantError("step " + std::to_string(step) + ", user " + n.user_id() +
                         ": click probabilities sum to " + std::to_string(s));
}

inline Checkpoint take_checkpoint(std::size_t step, const std::vector<std::string>& users,
                                  const std::map<std::string, BeliefNetwork>& nets) {
  Checkpoint c{step, {}, {}};
  for (const auto& u : users) {
    c.beliefs[u] = nets.at(u).beliefs();
    c.probs[u] = nets.at(u).click_probs();
  }
  return c;
}

}  // namespace sim_detail

// The closed loop. Within a step every user sees the start-of-step belief
// networks and category graph; accepted items reach the graph at the end
// of the step in user order, then feed order. Users may run on several
// threads with identical results.
inline RunRecord run_loop(const World& world, const SimConfig& cfg,
                          const GeneratorPort* generator = nullptr) {
  cfg.validate();
  const Corpus& corpus = *world.corpus;
  CategoryGraph graph = world.graph;
  std::map<std::string, BeliefNetwork> nets = world.networks;
  std::map<std::string, FeatureVector> gen_vectors;
  const std::size_t n_cats = corpus.taxonomy().size();

  std::unique_ptr<TemplateGenerator> own_gen;
  if (!generator) {
    own_gen = std::make_unique<TemplateGenerator>(world.graph, *world.vocab);
    generator = own_gen.get();
  }

  RunRecord rec;
  rec.config = cfg;
  rec.users = cfg.users.empty() ? std::vector<std::string>(corpus.users().begin(), corpus.users().end())
                                : cfg.users;
  for (const auto& u : rec.users)
    if (!nets.count(u)) throw UnknownKeyError("unknown user '" + u + "'");
  if (world.classification) rec.fb_before = world.classification->fb_users;

  std::map<std::string, NudgeSession> sessions;
  if (mixes_generated(cfg.model) && world.classification) {
    for (const auto& u : rec.users) {
      if (!world.classification->fb_users.count(u)) continue;
      auto s = start_session(graph, nets.at(u), world.classes_of(u), cfg.theta, cfg.discipline,
                             cfg.path_trace);
      rec.initial_paths[u] = s.path.key();
      sessions.emplace(u, std::move(s));
    }
  }

  const auto cps = cfg.checkpoints.empty() ? default_checkpoints(cfg.feeds) : cfg.checkpoints;
  auto is_cp = [&](std::size_t t) { return std::find(cps.begin(), cps.end(), t) != cps.end(); };
  if (is_cp(0)) rec.checkpoints.push_back(sim_detail::take_checkpoint(0, rec.users, nets));
  if (cfg.track_fb && world.classification) rec.fb_count_initial = world.classification->fb_users.size();

  for (std::size_t t = 1; t <= cfg.feeds; ++t) {
    const std::map<std::string, BeliefNetwork> snapshot = nets;
    std::optional<UcIndex> uc;
    if (baseline_of(cfg.model) == Baseline::uc) uc.emplace(snapshot);
    const RecContext ctx{corpus, world.item_vectors, gen_vectors, snapshot};
    StepRecord step{t, std::vector<UserStep>(rec.users.size()), std::nullopt};
    std::vector<std::vector<Item>> accepted(rec.users.size());

    auto simulate_user = [&](std::size_t i) {
      const std::string& u = rec.users[i];
      NudgeSession* session = nullptr;
      if (auto it = sessions.find(u); it != sessions.end()) session = &it->second;
      UserStep& us = step.users[i];
      us.user = u;
      us.feed = assemble_feed({cfg.model, cfg.w, cfg.k, t}, u, ctx, uc ? &*uc : nullptr, session,
                              generator, cfg.seed, &us.notes);
      us.coverage = diversity_coverage(us.feed, n_cats);
      RngStream rng = step_stream(cfg.seed, u, t, 0);
      const BeliefNetwork& before = snapshot.at(u);
      BeliefNetwork& net = nets.at(u);
      for (const auto& item : us.feed.items) {
        Decision d = decide(item, before, rng);
        if (d.ap < 0 || d.ap > 1 + 1e-12)
          throw InvariantError("step " + std::to_string(t) + ", user " + u + ": AP out of range");
        if (item.origin == Origin::generated && session) {
          auto r = apply_feedback(*session, item, d.accepted, graph, net, t, nullptr, nullptr, true);
          if (r.rescheduled) us.notes.push_back("rescheduled after " + item.prompt_key);
          if (r.became_terminal) us.notes.push_back("session terminal");
        } else {
          net.update_on_feedback(item, d.accepted);
        }
        if (d.accepted) accepted[i].push_back(item);
        us.decisions.push_back(std::move(d));
      }
      sim_detail::check_network(net, t);
    };

    const std::size_t nthreads = std::max<std::size_t>(1, std::min(cfg.threads, rec.users.size()));
    if (nthreads == 1) {
      for (std::size_t i = 0; i < rec.users.size(); ++i) simulate_user(i);
    } else {
      std::vector<std::thread> pool;
      std::vector<std::exception_ptr> errors(nthreads);
      for (std::size_t w = 0; w < nthreads; ++w)
        pool.emplace_back([&, w] {
          try {
            for (std::size_t i = w; i < rec.users.size(); i += nthreads) simulate_user(i);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      for (auto& th : pool) th.join();
      for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    }

    // barrier: category graph absorbs this step's acceptances
    for (std::size_t i = 0; i < rec.users.size(); ++i)
      for (const auto& item : accepted[i]) {
        if (item.origin == Origin::generated) {
          auto v = world.embed->embed(item);
          gen_vectors[item.id] = v;
          graph.accept_item_update(item, v);
        } else {
          graph.accept_item_update(item, world.item_vectors[corpus.item_position(item.id)]);
        }
      }

    if (cfg.track_fb) {
      std::size_t warm = 0;
      for (const auto& [_, n] : nets) warm += !n.cold();
      if (warm >= kMinClassifiedUsers)
        step.fb_count = classify_users(nets, corpus.categories()).fb_users.size();
    }
    if (is_cp(t)) rec.checkpoints.push_back(sim_detail::take_checkpoint(t, rec.users, nets));
    rec.steps.push_back(std::move(step));
  }

  for (const auto& [u, s] : sessions) rec.reschedules[u] = s.reschedules;
  std::size_t warm = 0;
  for (const auto& [_, n] : nets) warm += !n.cold();
  if (warm >= kMinClassifiedUsers) rec.fb_after = classify_users(nets, corpus.categories()).fb_users;
  return rec;
}

}  // namespace bheisr
