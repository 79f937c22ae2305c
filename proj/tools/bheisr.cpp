// bheisr command-line driver.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <tuple>

#include <CLI11.hpp>

#include "bheisr/bheisr.hpp"
#include "bheisr/external_generator.hpp"

namespace fs = std::filesystem;
using namespace bheisr;

namespace {

// Flags shared by every subcommand; values stay strings so the config file
// and the command line go through the same parser.
struct CommonFlags {
  std::string config;
  std::vector<std::pair<std::string, std::string>> given;  // key, raw value
  std::map<std::string, std::string> raw;

  void add(CLI::App* app) {
    app->add_option("--config", config, "flat key = value config file");
    for (const auto& [flag, key, help] : table()) app->add_option(flag, raw[key], help);
  }

  static const std::vector<std::tuple<std::string, std::string, std::string>>& table() {
    static const std::vector<std::tuple<std::string, std::string, std::string>> t = {
        {"--dataset", "dataset", "MIND TSV, IMDB directory, or corpus JSON"},
        {"--synth", "synth", "synthetic corpus: bundled or users=..,categories=..,subcats=..,items=..,biased=..,seed=..,history=.."},
        {"--model", "model", "rd, cb, uc, rd_wc, cb_wc, uc_wc or bheisr"},
        {"--w", "w", "share of generated items per feed"},
        {"--k", "k", "feed size"},
        {"--theta", "theta", "rejection tolerance (integer or inf)"},
        {"--feeds", "feeds", "number of feeds"},
        {"--seed", "seed", "run seed"},
        {"--out", "out", "output directory"},
        {"--threads", "threads", "worker threads"},
        {"--generator", "generator.kind", "template or external"},
        {"--generator-url", "generator.url", "endpoint for the external generator"},
    };
    return t;
  }

  RunOptions resolve(const CLI::App* app, bool* model_given = nullptr) const {
    RunOptions o;
    FlatConfig file;
    if (!config.empty()) {
      file = load_flat_config(config);
      apply_config(o, file);
    }
    bool m = file.count("model") > 0;
    for (const auto& [flag, key, _] : table())
      if (app->count(flag) > 0) {
        apply_setting(o, key, raw.at(key));
        m = m || key == "model";
      }
    if (model_given) *model_given = m;
    o.sim.validate();
    return o;
  }
};

fs::path prepare_out(const RunOptions& o) {
  fs::path out = o.out;
  fs::create_directories(out);
  return out;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  return f;
}

std::shared_ptr<const Corpus> load_corpus(const RunOptions& o, std::vector<Reject>* rejects = nullptr) {
  LoadResult r = load_input(o);
  if (rejects) *rejects = std::move(r.rejects);
  return std::make_shared<const Corpus>(std::move(r.corpus));
}

// Template generator, optionally fronted by the external one.
struct Generators {
  std::unique_ptr<TemplateGenerator> templ;
  std::unique_ptr<ExternalGenerator> external;

  Generators(const World& w, const RunOptions& o) {
    templ = std::make_unique<TemplateGenerator>(w.graph, *w.vocab);
    if (o.generator_kind == "external") {
      if (o.generator_url.empty()) throw Error("generator.kind = external needs generator.url");
      external = std::make_unique<ExternalGenerator>(o.generator_url, o.generator_timeout_ms, *templ,
                                                     o.generator_retries);
    }
  }
  const GeneratorPort* get() const {
    return external ? static_cast<const GeneratorPort*>(external.get()) : templ.get();
  }
};

std::string pick_user(const World& w, const std::string& requested) {
  if (!requested.empty()) {
    if (!w.networks.count(requested)) throw UnknownKeyError("unknown user '" + requested + "'");
    return requested;
  }
  return first_fb_user(w);
}

int cmd_ingest(const RunOptions& o) {
  std::vector<Reject> rejects;
  auto corpus = load_corpus(o, &rejects);
  const fs::path out = prepare_out(o);
  save_corpus(*corpus, out / "corpus.json");
  {
    auto f = open_out(out / "rejects.csv");
    f << "file,line,reason\n";
    for (const auto& r : rejects) f << csv_escape(r.file) << ',' << r.line << ',' << csv_escape(r.reason) << '\n';
  }
  if (corpus->signal_kind() == SignalKind::click) write_behaviors(*corpus, out / "behaviors.tsv");
  std::size_t interested = 0;
  for (const auto& x : corpus->interactions()) interested += corpus->interested(x);
  std::cout << "items " << corpus->items().size() << ", interactions " << corpus->interactions().size()
            << " (" << interested << " interested), users " << corpus->users().size() << ", categories "
            << corpus->taxonomy().size() << ", rejects " << rejects.size() << '\n';
  return 0;
}

int cmd_detect(const RunOptions& o, const std::string& user) {
  auto corpus = load_corpus(o);
  World world(corpus);
  const fs::path out = prepare_out(o);
  if (!world.classification) throw PreconditionError("fewer than 8 users with history; cannot classify");

  nlohmann::json j = to_json(*world.classification);
  if (!world.fb_users().empty() || !user.empty()) {
    const std::string u = pick_user(world, user);
    SimConfig cfg = o.sim;
    cfg.users = {u};
    Generators gens(world, o);
    const RunRecord r = run_loop(world, cfg, gens.get());
    DetectionReport rep = forward_report(r.feeds_of(u), corpus->taxonomy().size(), o.window);
    rep.classification = *world.classification;
    if (rep.coverage.size() >= 5 && rep.shares.size() >= 2) rep.fb_system = detect_fb_system(rep, o.thresholds);
    j = to_json(rep);
    j["audited_user"] = u;
    j["audited_model"] = to_string(cfg.model);
  }
  open_out(out / "detection.json") << j.dump(2) << '\n';
  auto h = open_out(out / "belief_histograms.csv");
  write_belief_histograms(h, world.networks, corpus->categories());
  std::cout << "fb users " << world.classification->fb_users.size() << " of " << corpus->users().size();
  if (j.contains("fb_system")) std::cout << ", fb_system " << (j["fb_system"].get<bool>() ? "true" : "false");
  std::cout << '\n';
  return 0;
}

int cmd_graph(const RunOptions& o, bool trace) {
  auto corpus = load_corpus(o);
  World world(corpus);
  const fs::path out = prepare_out(o);
  open_out(out / "category_graph.json") << world.graph.to_json(world.vocab.get()).dump(2) << '\n';
  auto paths = open_out(out / "prompt_paths.csv");
  paths << "user,source,target,length,path\n";
  std::ofstream tr;
  if (trace) tr = open_out(out / "path_trace.jsonl");
  for (const auto& u : world.fb_users()) {
    const auto s = start_session(world.graph, world.networks.at(u), world.classes_of(u), o.sim.theta,
                                 o.sim.discipline, trace ? &tr : nullptr);
    paths << u << ',' << s.path.source() << ',' << s.path.target() << ',' << s.path.size() << ','
          << csv_escape(s.path.key()) << '\n';
  }
  std::cout << world.graph.categories().size() << " categories, " << world.fb_users().size()
            << " prompt paths\n";
  return 0;
}

// One feed per user from the initial state; no feedback is applied.
int cmd_recommend(const RunOptions& o) {
  auto corpus = load_corpus(o);
  World world(corpus);
  Generators gens(world, o);
  const fs::path out = prepare_out(o);
  std::optional<UcIndex> uc;
  if (baseline_of(o.sim.model) == Baseline::uc) uc.emplace(world.networks);
  std::map<std::string, FeatureVector> none;
  const RecContext ctx{*corpus, world.item_vectors, none, world.networks};
  auto f = open_out(out / "feeds.jsonl");
  const auto users = o.sim.users.empty() ? std::vector<std::string>(corpus->users().begin(), corpus->users().end())
                                         : o.sim.users;
  for (const auto& u : users) {
    std::optional<NudgeSession> session;
    if (mixes_generated(o.sim.model) && world.classification && world.classification->fb_users.count(u))
      session = start_session(world.graph, world.networks.at(u), world.classes_of(u), o.sim.theta,
                              o.sim.discipline);
    std::vector<std::string> notes;
    const Feed feed = assemble_feed({o.sim.model, o.sim.w, o.sim.k, 1}, u, ctx, uc ? &*uc : nullptr,
                                    session ? &*session : nullptr, gens.get(), o.sim.seed, &notes);
    nlohmann::json items = nlohmann::json::array();
    for (const auto& it : feed.items) items.push_back(feed_item_json(it));
    f << nlohmann::json{{"step", 1}, {"user", u}, {"items", items}, {"notes", notes}}.dump() << '\n';
  }
  std::cout << users.size() << " feeds written to " << (out / "feeds.jsonl").string() << '\n';
  return 0;
}

int cmd_simulate(const RunOptions& o) {
  auto corpus = load_corpus(o);
  World world(corpus);
  Generators gens(world, o);
  const fs::path out = prepare_out(o);
  SimConfig cfg = o.sim;
  cfg.track_fb = true;
  const RunRecord r = run_loop(world, cfg, gens.get());
  open_out(out / "run.json") << to_json(r).dump(1) << '\n';
  auto f = open_out(out / "feeds.jsonl");
  write_feed_log(f, r);
  auto c = open_out(out / "coverage_long.csv");
  c << "step,series,value\n";
  for (const auto& s : r.steps)
    for (const auto& u : s.users) c << s.step << ',' << csv_escape(u.user) << ',' << fmt_fixed(u.coverage, 6) << '\n';
  std::cout << to_string(cfg.model) << ": " << r.steps.size() << " feeds for " << r.users.size()
            << " users, fb users " << r.fb_before.size() << " -> " << r.fb_after.size() << '\n';
  return 0;
}

struct ExperimentFlags {
  int number = 0;
  std::string user, interest, disinterest, w_values;
};

int cmd_experiment(RunOptions o, const ExperimentFlags& e, bool model_given) {
  auto corpus = load_corpus(o);
  World world(corpus);
  const fs::path out = prepare_out(o);
  if (!e.w_values.empty()) o.w_values = parse_real_list("w_values", e.w_values);
  switch (e.number) {
    case 1: {
      const auto t = experiment_coverage(world, o.sim, pick_user(world, e.user));
      auto f = open_out(out / "exp1_coverage.csv");
      write_coverage_table(f, t);
      auto l = open_out(out / "exp1_coverage_long.csv");
      write_coverage_long(l, t);
      std::cout << "user " << t.user << ": CB sum " << fmt_fixed(model_sum(t, Model::cb), 3) << ", CB_wC sum "
                << fmt_fixed(model_sum(t, Model::cb_w), 3) << '\n';
      return 0;
    }
    case 2: {
      std::vector<Trajectory> ts;
      if (!e.user.empty()) {
        const std::string u = pick_user(world, e.user);
        if (!e.interest.empty() && !e.disinterest.empty())
          ts.push_back(experiment_belief_trajectory(world, o.sim, u, e.interest, e.disinterest));
        else
          ts.push_back(experiment_belief_trajectory(world, o.sim, u));
      } else {
        const std::string s = path_extreme_user(world, true), l = path_extreme_user(world, false);
        ts.push_back(experiment_belief_trajectory(world, o.sim, s));
        if (l != s) ts.push_back(experiment_belief_trajectory(world, o.sim, l));
      }
      auto f = open_out(out / "exp2_trajectory_long.csv");
      write_trajectory_long(f, ts);
      for (const auto& t : ts)
        std::cout << t.user << " [" << t.path << "] " << t.interest << ' ' << fmt_fixed(t.interest_belief.front(), 3)
                  << " -> " << fmt_fixed(t.interest_belief.back(), 3) << ", " << t.disinterest << ' '
                  << fmt_fixed(t.disinterest_belief.front(), 3) << " -> "
                  << fmt_fixed(t.disinterest_belief.back(), 3) << '\n';
      return 0;
    }
    case 3: {
      const auto t = experiment_fb_count(world, o.sim);
      auto f = open_out(out / "exp3_fb_counts.csv");
      write_fb_table(f, t);
      for (Model m : t.models) std::cout << to_string(m) << ' ' << final_count(t, m) << "  ";
      std::cout << '\n';
      return 0;
    }
    case 4: {
      SimConfig cfg = o.sim;
      if (!model_given) cfg.model = Model::uc_w;
      const auto s = experiment_w_sweep(world, cfg, pick_user(world, e.user), o.w_values);
      auto f = open_out(out / "exp4_sweep_long.csv");
      write_sweep_long(f, s);
      for (std::size_t i = 0; i < s.w_values.size(); ++i)
        std::cout << "w=" << fmt_fixed(s.w_values[i], 2) << " final " << fmt_fixed(s.coverage[i].back(), 3) << "  ";
      std::cout << '\n';
      return 0;
    }
    default: throw Error("experiment number must be 1, 2, 3 or 4");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Belief-harmony filter bubble simulator"};
  app.require_subcommand(1);

  CommonFlags f_ingest, f_detect, f_graph, f_rec, f_sim, f_exp;
  auto* ingest = app.add_subcommand("ingest", "load a dataset and write the canonical corpus");
  f_ingest.add(ingest);

  auto* detect = app.add_subcommand("detect", "classify users and audit one user's feeds");
  f_detect.add(detect);
  std::string detect_user;
  detect->add_option("--user", detect_user, "user whose feeds are audited (default: first FB user)");

  auto* graph = app.add_subcommand("graph", "export the category graph and prompt paths");
  f_graph.add(graph);
  bool trace = false;
  graph->add_flag("--trace-paths", trace, "write per-hop exploration trace");

  auto* rec = app.add_subcommand("recommend", "assemble one feed per user");
  f_rec.add(rec);

  auto* sim = app.add_subcommand("simulate", "run the closed feedback loop");
  f_sim.add(sim);

  auto* exp = app.add_subcommand("experiment", "run experiment 1, 2, 3 or 4");
  f_exp.add(exp);
  ExperimentFlags ef;
  exp->add_option("number", ef.number, "experiment number")->required()->check(CLI::Range(1, 4));
  exp->add_option("--user", ef.user, "target user");
  exp->add_option("--interest", ef.interest, "experiment 2: interest category");
  exp->add_option("--disinterest", ef.disinterest, "experiment 2: disinterest category");
  exp->add_option("--w-values", ef.w_values, "experiment 4: comma-separated nudge weights");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*ingest) return cmd_ingest(f_ingest.resolve(ingest));
    if (*detect) return cmd_detect(f_detect.resolve(detect), detect_user);
    if (*graph) return cmd_graph(f_graph.resolve(graph), trace);
    if (*rec) return cmd_recommend(f_rec.resolve(rec));
    if (*sim) return cmd_simulate(f_sim.resolve(sim));
    if (*exp) {
      bool model_given = false;
      RunOptions o = f_exp.resolve(exp, &model_given);
      return cmd_experiment(o, ef, model_given);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
