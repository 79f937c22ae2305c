#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "bheisr/simulate.hpp"
#include "bheisr/text.hpp"

namespace bheisr {

inline const std::vector<Model>& table_models() {
  static const std::vector<Model> m = {Model::rd, Model::rd_w, Model::cb,    Model::cb_w,
                                       Model::uc, Model::uc_w, Model::bheisr};
  return m;
}

inline double sum(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s;
}

// (mixed - plain) / plain, in percent.
inline double improvement(double mixed, double plain) {
  return plain > 0 ? (mixed - plain) / plain * 100.0 : 0.0;
}

// Lowest user id among the FB-affected users.
inline std::string first_fb_user(const World& world) {
  const auto fb = world.fb_users();
  if (fb.empty()) throw PreconditionError("no FB-affected user in the population");
  return fb.front();
}

// ---- Experiment 1: feed coverage per model ---------------------------------

struct CoverageTable {
  std::string user;
  std::vector<Model> models;
  std::vector<std::vector<double>> coverage;  // [model][feed]
};

inline CoverageTable experiment_coverage(const World& world, SimConfig cfg, const std::string& user) {
  CoverageTable t{user, table_models(), {}};
  cfg.users = {user};
  for (Model m : t.models) {
    cfg.model = m;
    t.coverage.push_back(run_loop(world, cfg).coverage_series(user));
  }
  return t;
}

inline double model_sum(const CoverageTable& t, Model m) {
  for (std::size_t i = 0; i < t.models.size(); ++i)
    if (t.models[i] == m) return sum(t.coverage[i]);
  throw UnknownKeyError("model not in table");
}

inline void write_coverage_table(std::ostream& out, const CoverageTable& t) {
  out << "Times";
  for (Model m : t.models) out << ',' << to_string(m);
  out << '\n';
  const std::size_t T = t.coverage.empty() ? 0 : t.coverage.front().size();
  for (std::size_t f = 0; f < T; ++f) {
    out << "feed_" << f + 1;
    for (const auto& col : t.coverage) out << ',' << fmt_fixed(col[f], 3);
    out << '\n';
  }
  out << "sum.";
  for (const auto& col : t.coverage) out << ',' << fmt_fixed(sum(col), 3);
  out << '\n';
  out << "Improv.";
  for (auto [mixed, plain] : {std::pair{Model::rd_w, Model::rd}, std::pair{Model::cb_w, Model::cb},
                              std::pair{Model::uc_w, Model::uc}})
    out << ',' << to_string(mixed) << " - " << to_string(plain) << ','
        << fmt_fixed(improvement(model_sum(t, mixed), model_sum(t, plain)), 2) << '%';
  out << ",\n";
}

inline void write_coverage_long(std::ostream& out, const CoverageTable& t) {
  out << "step,series,value\n";
  for (std::size_t i = 0; i < t.models.size(); ++i)
    for (std::size_t f = 0; f < t.coverage[i].size(); ++f)
      out << f + 1 << ',' << to_string(t.models[i]) << ',' << fmt_fixed(t.coverage[i][f], 6) << '\n';
}

// ---- Experiment 2: belief trajectories -------------------------------------

// Initial prompt path of every FB-affected user, keyed by user.
inline std::map<std::string, PromptPath> initial_paths(const World& world,
                                                       std::optional<std::size_t> theta = 2) {
  std::map<std::string, PromptPath> out;
  for (const auto& u : world.fb_users())
    out[u] = start_session(world.graph, world.networks.at(u), world.classes_of(u), theta).path;
  return out;
}

// FB user with the shortest (or longest) initial path; ties by id.
inline std::string path_extreme_user(const World& world, bool shortest) {
  const auto paths = initial_paths(world);
  if (paths.empty()) throw PreconditionError("no FB-affected user in the population");
  std::string best;
  std::size_t bl = 0;
  for (const auto& [u, p] : paths)
    if (best.empty() || (shortest ? p.size() < bl : p.size() > bl)) best = u, bl = p.size();
  return best;
}

struct Trajectory {
  std::string user, interest, disinterest, path;
  std::vector<std::size_t> steps;
  std::vector<double> interest_belief, disinterest_belief;
};

inline Trajectory experiment_belief_trajectory(const World& world, SimConfig cfg,
                                               const std::string& user, const std::string& interest,
                                               const std::string& disinterest) {
  cfg.users = {user};
  const RunRecord r = run_loop(world, cfg);
  Trajectory tr{user, interest, disinterest, {}, {}, {}, {}};
  if (auto it = r.initial_paths.find(user); it != r.initial_paths.end()) tr.path = it->second;
  for (const auto& c : r.checkpoints) {
    tr.steps.push_back(c.step);
    tr.interest_belief.push_back(c.beliefs.at(user).at(interest));
    tr.disinterest_belief.push_back(c.beliefs.at(user).at(disinterest));
  }
  return tr;
}

inline Trajectory experiment_belief_trajectory(const World& world, const SimConfig& cfg,
                                               const std::string& user) {
  const auto [src, dst] = select_endpoints(world.networks.at(user), world.classes_of(user));
  return experiment_belief_trajectory(world, cfg, user, src, dst);
}

inline void write_trajectory_long(std::ostream& out, const std::vector<Trajectory>& ts,
                                  bool header = true) {
  if (header) out << "step,series,value\n";
  for (const auto& t : ts)
    for (std::size_t i = 0; i < t.steps.size(); ++i) {
      out << t.steps[i] << ',' << csv_escape(t.user + ":" + t.interest) << ','
          << fmt_fixed(t.interest_belief[i], 6) << '\n';
      out << t.steps[i] << ',' << csv_escape(t.user + ":" + t.disinterest) << ','
          << fmt_fixed(t.disinterest_belief[i], 6) << '\n';
    }
}

// ---- Experiment 3: FB-user counts ------------------------------------------

struct FbCountTable {
  std::vector<Model> models;
  std::vector<std::vector<std::size_t>> counts;  // [model][feed], feed 0 = before
};

inline FbCountTable experiment_fb_count(const World& world, SimConfig cfg) {
  FbCountTable t{table_models(), {}};
  cfg.users.clear();
  cfg.track_fb = true;
  for (Model m : t.models) {
    cfg.model = m;
    const RunRecord r = run_loop(world, cfg);
    std::vector<std::size_t> col{r.fb_count_initial.value_or(0)};
    for (const auto& s : r.steps) col.push_back(s.fb_count.value_or(0));
    t.counts.push_back(std::move(col));
  }
  return t;
}

inline std::size_t final_count(const FbCountTable& t, Model m) {
  for (std::size_t i = 0; i < t.models.size(); ++i)
    if (t.models[i] == m) return t.counts[i].back();
  throw UnknownKeyError("model not in table");
}

// Mixed columns carry a trailing " v" where they sit below their baseline.
inline void write_fb_table(std::ostream& out, const FbCountTable& t) {
  out << "Times";
  for (Model m : t.models) out << ',' << to_string(m);
  out << '\n';
  const std::size_t rows = t.counts.empty() ? 0 : t.counts.front().size();
  for (std::size_t f = 0; f < rows; ++f) {
    out << "feed_" << f;
    for (std::size_t i = 0; i < t.models.size(); ++i) {
      out << ',' << t.counts[i][f];
      const Model base = paired_baseline(t.models[i]);
      if (base != t.models[i])
        for (std::size_t j = 0; j < t.models.size(); ++j)
          if (t.models[j] == base && t.counts[i][f] < t.counts[j][f]) out << " v";
    }
    out << '\n';
  }
}

// ---- Experiment 4: nudge weight sweep --------------------------------------

// Fraction of categories with positive belief.
inline double belief_coverage(const std::map<std::string, double>& beliefs) {
  if (beliefs.empty()) return 0.0;
  std::size_t n = 0;
  for (const auto& [_, b] : beliefs) n += b > 0;
  return static_cast<double>(n) / static_cast<double>(beliefs.size());
}

struct SweepResult {
  std::string user;
  std::vector<double> w_values;
  std::vector<std::vector<double>> coverage;  // [w][step 0..T]
};

inline SweepResult experiment_w_sweep(const World& world, SimConfig cfg, const std::string& user,
                                      const std::vector<double>& w_values) {
  SweepResult s{user, w_values, {}};
  cfg.users = {user};
  cfg.checkpoints.clear();
  for (std::size_t t = 0; t <= cfg.feeds; ++t) cfg.checkpoints.push_back(t);
  for (double w : w_values) {
    cfg.w = w;
    const RunRecord r = run_loop(world, cfg);
    std::vector<double> col;
    for (const auto& c : r.checkpoints) col.push_back(belief_coverage(c.beliefs.at(user)));
    s.coverage.push_back(std::move(col));
  }
  return s;
}

inline void write_sweep_long(std::ostream& out, const SweepResult& s) {
  out << "step,series,value\n";
  for (std::size_t i = 0; i < s.w_values.size(); ++i)
    for (std::size_t t = 0; t < s.coverage[i].size(); ++t)
      out << t << ",w=" << fmt_fixed(s.w_values[i], 2) << ',' << fmt_fixed(s.coverage[i][t], 6)
          << '\n';
}

}  // namespace bheisr
