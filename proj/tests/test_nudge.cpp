#include <gtest/gtest.h>

#include "bheisr/nudge.hpp"
#include "bheisr/synth.hpp"

using namespace bheisr;

namespace {

PromptPath P(const std::string& letters) {
  PromptPath p;
  for (char c : letters) p.nodes.push_back(std::string(1, c));
  return p;
}

std::string K(const std::string& letters) { return P(letters).key(); }

std::vector<std::string> keys(const std::vector<PromptPath>& q) {
  std::vector<std::string> out;
  for (const auto& p : q) out.push_back(p.key());
  return out;
}

// Line graph over the letters with a strong chain, so exploring from the
// first to the last letter walks the whole line.
struct Line {
  std::vector<std::string> cats;
  CategoryGraph graph;
  BeliefNetwork net;
  std::map<std::string, BeliefClass> classes;

  explicit Line(const std::string& letters) {
    std::map<std::pair<std::string, std::string>, double> rho;
    for (char c : letters) cats.push_back(std::string(1, c));
    for (std::size_t i = 0; i + 1 < cats.size(); ++i) rho[{cats[i], cats[i + 1]}] = 0.9;
    graph = CategoryGraph::from_edges(cats, rho);
    net = BeliefNetwork("u", cats);
    net.add_clicks(cats.front(), cats.front() + "/s", 8);
    for (std::size_t i = 1; i + 1 < cats.size(); ++i) net.add_clicks(cats[i], cats[i] + "/s", 1);
    for (const auto& c : cats) classes[c] = BeliefClass::Normal;
    classes[cats.front()] = BeliefClass::ExtremeHigh;
    classes[cats.back()] = BeliefClass::ExtremeLow;
  }
};

class FixedGenerator : public GeneratorPort {
 public:
  GenerationOutcome generate(const GenerationRequest& req) const override {
    Item it = generated_shell(req);
    it.title = {"about", req.prompt.key()};
    return {it, false, {}};
  }
};

}  // namespace

TEST(BinarySplit, HandTracedLengths) {
  EXPECT_FALSE(binary_split(P("AB")).has_value());
  const std::map<std::string, std::pair<std::string, std::string>> expect = {
      {"ABC", {"AB", "BC"}},          {"ABCD", {"AB", "CD"}},         {"ABCDE", {"AB", "DE"}},
      {"ABCDEF", {"ABC", "DEF"}},     {"ABCDEFG", {"ABC", "EFG"}},    {"ABCDEFGH", {"ABCD", "EFGH"}},
      {"ABCDEFGHI", {"ABCD", "FGHI"}}};
  for (const auto& [in, out] : expect) {
    const auto s = binary_split(P(in));
    ASSERT_TRUE(s.has_value()) << in;
    EXPECT_EQ(s->first, P(out.first)) << in;
    EXPECT_EQ(s->second, P(out.second)) << in;
  }
  EXPECT_THROW(binary_split(P("A")), InvariantError);
}

TEST(BinarySplit, TreeSizeBound) {
  for (std::size_t L = 2; L <= 12; ++L) {
    std::string letters;
    for (std::size_t i = 0; i < L; ++i) letters += static_cast<char>('A' + i);
    std::vector<PromptPath> stack{P(letters)};
    std::size_t prompts = 0;
    while (!stack.empty()) {
      PromptPath p = stack.back();
      stack.pop_back();
      ++prompts;
      if (auto s = binary_split(p)) stack.push_back(s->first), stack.push_back(s->second);
    }
    EXPECT_LE(prompts, 2 * L - 1) << L;
  }
}

TEST(Session, StartSplitsInitialPath) {
  Line line("ABCD");
  const NudgeSession s = start_session(line.graph, line.net, line.classes);
  EXPECT_EQ(s.path, P("ABCD"));
  EXPECT_EQ(keys(s.queue), (std::vector<std::string>{K("AB"), K("CD")}));
}

TEST(Session, RunStepSpansHeadPrompt) {
  Line line("ABCD");
  NudgeSession s = start_session(line.graph, line.net, line.classes);
  const FixedGenerator gen;
  const Item it = run_step(s, gen, 1).item;
  EXPECT_EQ(it.prompt_key, K("AB"));
  EXPECT_EQ(it.category_weights, (std::map<std::string, double>{{"A", 0.5}, {"B", 0.5}}));
  EXPECT_EQ(s.queue.size(), 2u);  // not consumed
  s.queue.clear();
  EXPECT_THROW(run_step(s, gen, 1), PreconditionError);
}

TEST(Feedback, AcceptPopsHead) {
  Line line("ABCD");
  NudgeSession s = start_session(line.graph, line.net, line.classes);
  const FixedGenerator gen;
  const Item it = run_step(s, gen, 1).item;
  const double before = line.net.category_mass("B");
  apply_feedback(s, it, true, line.graph, line.net, 1);
  EXPECT_EQ(keys(s.queue), std::vector<std::string>{K("CD")});
  EXPECT_GT(line.net.category_mass("B"), before);
  EXPECT_EQ(line.net.accepted().back(), it.id);
}

TEST(Feedback, RejectSplitsToFront) {
  Line line("ABCD");
  NudgeSession s = start_session(line.graph, line.net, line.classes);
  s.queue = {P("ABCD"), P("XY")};
  const FixedGenerator gen;
  const Item it = run_step(s, gen, 1).item;
  apply_feedback(s, it, false, line.graph, line.net, 1);
  EXPECT_EQ(keys(s.queue), (std::vector<std::string>{K("AB"), K("CD"), K("XY")}));
  EXPECT_EQ(line.net.declined_prompts(), std::vector<std::string>{K("ABCD")});
  EXPECT_EQ(s.ledger.counts.at(K("ABCD")), 1u);
}

TEST(Feedback, RejectSplitsToBack) {
  Line line("ABCD");
  NudgeSession s = start_session(line.graph, line.net, line.classes, 2, QueueDiscipline::back);
  s.queue = {P("ABCD"), P("XY")};
  const FixedGenerator gen;
  apply_feedback(s, run_step(s, gen, 1).item, false, line.graph, line.net, 1);
  EXPECT_EQ(keys(s.queue), (std::vector<std::string>{K("XY"), K("AB"), K("CD")}));
}

TEST(Feedback, TerminalRejectReschedules) {
  Line line("ABCD");
  NudgeSession s = start_session(line.graph, line.net, line.classes);
  s.queue = {P("AB")};
  const FixedGenerator gen;
  const auto r = apply_feedback(s, run_step(s, gen, 1).item, false, line.graph, line.net, 1);
  EXPECT_TRUE(r.rescheduled);
  EXPECT_EQ(s.reschedules, 1u);
  EXPECT_FALSE(s.terminal);
  EXPECT_EQ(keys(s.queue), (std::vector<std::string>{K("AB"), K("CD")}));
}

TEST(Feedback, TerminalWhenNoAlternative) {
  Line line("AB");
  NudgeSession s = start_session(line.graph, line.net, line.classes, 1);
  const FixedGenerator gen;
  FeedbackResult r;
  for (int i = 0; i < 2 && !s.terminal; ++i)
    r = apply_feedback(s, run_step(s, gen, 1).item, false, line.graph, line.net, 1);
  EXPECT_TRUE(s.terminal);
  EXPECT_TRUE(r.became_terminal);
  EXPECT_TRUE(s.queue.empty());
}

TEST(Feedback, MismatchedPrompt) {
  Line line("ABCD");
  NudgeSession s = start_session(line.graph, line.net, line.classes);
  Item stray = run_step(s, FixedGenerator(), 1).item;
  stray.prompt_key = K("DA");
  EXPECT_THROW(apply_feedback(s, stray, true, line.graph, line.net, 1), InvariantError);
  EXPECT_TRUE(apply_feedback(s, stray, true, line.graph, line.net, 1, nullptr, nullptr, true).stale);
  EXPECT_THROW(apply_feedback(s, make_dataset_item("d", "A", "A/s", "x"), true, line.graph, line.net, 1),
               PreconditionError);
}

TEST(Feedback, RejectEverythingOnLengthEight) {
  Line line("ABCDEFGH");
  NudgeSession s = start_session(line.graph, line.net, line.classes, std::nullopt);
  ASSERT_EQ(s.path.size(), 8u);
  const FixedGenerator gen;
  std::size_t steps = 0;
  bool rescheduled = false;
  while (!rescheduled && steps < 100) {
    ++steps;
    rescheduled = apply_feedback(s, run_step(s, gen, 1).item, false, line.graph, line.net, steps).rescheduled;
  }
  EXPECT_TRUE(rescheduled);
  EXPECT_LE(steps, 15u);
}

TEST(Feedback, QueueOnlyHoldsSplitsOfThePath) {
  Line line("ABCDEFG");
  NudgeSession s = start_session(line.graph, line.net, line.classes, std::nullopt);
  std::set<std::string> derivable;
  std::vector<PromptPath> stack{s.path};
  while (!stack.empty()) {
    PromptPath p = stack.back();
    stack.pop_back();
    derivable.insert(p.key());
    if (auto h = binary_split(p)) stack.push_back(h->first), stack.push_back(h->second);
  }
  const FixedGenerator gen;
  for (int i = 0; i < 6 && !s.queue.empty(); ++i) {
    const PromptPath before = s.path;
    const auto r = apply_feedback(s, run_step(s, gen, 1).item, i % 3 == 1, line.graph, line.net, i + 1);
    if (r.rescheduled || !(s.path == before)) break;
    for (const auto& p : s.queue) EXPECT_TRUE(derivable.count(p.key())) << p.key();
  }
}

TEST(Session, HistoryIsOrdered) {
  Line line("ABCD");
  NudgeSession s = start_session(line.graph, line.net, line.classes);
  const FixedGenerator gen;
  apply_feedback(s, run_step(s, gen, 1).item, false, line.graph, line.net, 1);
  apply_feedback(s, run_step(s, gen, 1).item, true, line.graph, line.net, 2);
  ASSERT_EQ(s.history.size(), 2u);
  EXPECT_LT(s.history[0].seq, s.history[1].seq);
  EXPECT_LE(s.history[0].step, s.history[1].step);
}

class TemplateGen : public ::testing::Test {
 protected:
  void SetUp() override {
    SynthSpec spec;
    spec.n_items = 340;
    spec.n_users = 4;
    corpus = synth_corpus(spec);
    vocab = std::make_shared<Vocabulary>(Vocabulary::from_corpus(corpus));
    embed = std::make_unique<TfidfEmbedder>(vocab);
    graph = CategoryGraph::build(corpus, *embed);
  }
  Corpus corpus;
  std::shared_ptr<Vocabulary> vocab;
  std::unique_ptr<TfidfEmbedder> embed;
  CategoryGraph graph;
};

TEST_F(TemplateGen, TextSpansPrompt) {
  const TemplateGenerator gen(graph, *vocab);
  const PromptPath p{{"autos", "travel"}};
  const Item it = gen.generate({p, "g1", 3}).item;
  const auto toks = tokenize(it.text());
  const std::set<std::string> tokset(toks.begin(), toks.end());
  EXPECT_TRUE(tokset.count("autos"));
  EXPECT_TRUE(tokset.count("travel"));
  for (const auto& c : p.nodes) {
    std::size_t hits = 0;
    for (const auto& t : gen.top_terms(c)) hits += tokset.count(t);
    EXPECT_GE(hits, 2u) << c;
  }
  EXPECT_EQ(it.category_weights, (std::map<std::string, double>{{"autos", 0.5}, {"travel", 0.5}}));
  EXPECT_EQ(it.origin, Origin::generated);
  const FeatureVector v = embed->embed(it);
  EXPECT_GT(correlation(v, graph.category_vector("autos")), 0.0);
  EXPECT_GT(correlation(v, graph.category_vector("travel")), 0.0);
}

TEST_F(TemplateGen, Deterministic) {
  const TemplateGenerator gen(graph, *vocab);
  const PromptPath p{{"news", "sports", "tv"}};
  EXPECT_EQ(gen.generate({p, "g", 9}).item, gen.generate({p, "g", 9}).item);
}

TEST_F(TemplateGen, ShortPromptRejected) {
  const TemplateGenerator gen(graph, *vocab);
  EXPECT_THROW(gen.generate({PromptPath{{"autos"}}, "g", 1}), InvariantError);
}
