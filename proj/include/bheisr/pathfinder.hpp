#pragma once

#include <algorithm>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bheisr/belief.hpp"
#include "bheisr/error.hpp"
#include "bheisr/fbdmr.hpp"
#include "bheisr/features.hpp"
#include "bheisr/text.hpp"

namespace bheisr {

struct PromptPath {
  std::vector<std::string> nodes;

  std::string key() const { return join(nodes, ">"); }
  std::size_t size() const noexcept { return nodes.size(); }
  const std::string& source() const { return nodes.front(); }
  const std::string& target() const { return nodes.back(); }
  bool operator==(const PromptPath&) const = default;

  void validate() const {
    if (nodes.size() < 2) throw InvariantError("prompt path shorter than 2: " + key());
    std::set<std::string> seen(nodes.begin(), nodes.end());
    if (seen.size() != nodes.size()) throw InvariantError("prompt path repeats a node: " + key());
  }
};

using Edge = std::pair<std::string, std::string>;

inline Edge undirected(const std::string& a, const std::string& b) {
  return a < b ? Edge{a, b} : Edge{b, a};
}

inline std::vector<Edge> path_edges(const PromptPath& p) {
  std::vector<Edge> out;
  for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i) out.push_back(undirected(p.nodes[i], p.nodes[i + 1]));
  return out;
}

// Rejection counts per prompt; once a prompt is rejected more than theta
// times its edges are penalized. No theta means never.
struct RejectionLedger {
  std::map<std::string, std::size_t> counts;
  std::optional<std::size_t> theta = 2;
  std::set<Edge> penalized_edges;

  bool penalized(const std::string& a, const std::string& b) const {
    return penalized_edges.count(undirected(a, b)) > 0;
  }
};

inline void record_rejection(RejectionLedger& ledger, const PromptPath& prompt) {
  const std::size_t n = ++ledger.counts[prompt.key()];
  if (ledger.theta && n > *ledger.theta)
    for (const auto& e : path_edges(prompt)) ledger.penalized_edges.insert(e);
}

// Highest-belief ExtremeHigh category to lowest-belief ExtremeLow category;
// ties go to the lexicographically smaller name.
inline std::pair<std::string, std::string> select_endpoints(
    const BeliefNetwork& net, const std::map<std::string, BeliefClass>& classes) {
  std::optional<std::string> src, dst;
  double sb = -1, db = std::numeric_limits<double>::infinity();
  for (const auto& [c, cl] : classes) {
    const double b = net.belief_degree(c);
    if (cl == BeliefClass::ExtremeHigh && b > sb) src = c, sb = b;
    if (cl == BeliefClass::ExtremeLow && b < db) dst = c, db = b;
  }
  if (!src || !dst) throw PreconditionError("user '" + net.user_id() + "' is not FB-affected");
  return {*src, *dst};
}

struct Candidate {
  std::string category;
  double rho = 0, belief = 0;
  int rej_w = 1;
  double score = 0;
};

// Scored candidates for the hop out of `current`: unvisited categories with
// positive correlation, minus hard-avoided edges.
template <CorrelationGraph G>
std::vector<Candidate> hop_candidates(const G& graph, const std::string& current,
                                      const BeliefNetwork& net, const RejectionLedger& ledger,
                                      const std::set<std::string>& visited,
                                      const std::set<Edge>& avoid = {}) {
  std::vector<Candidate> out;
  for (const auto& n : graph.categories()) {
    if (n == current || visited.count(n) || avoid.count(undirected(current, n))) continue;
    const double r = graph.rho(current, n);
    if (!(r > 0)) continue;
    Candidate c{n, r, net.belief_degree(n), ledger.penalized(current, n) ? -1 : 1, 0};
    c.score = c.rho + c.belief * c.rej_w;
    out.push_back(std::move(c));
  }
  return out;
}

inline const Candidate* best_candidate(const std::vector<Candidate>& cands) {
  const Candidate* best = nullptr;
  for (const auto& c : cands)  // categories arrive sorted, so '>' keeps the smaller name on ties
    if (!best || c.score > best->score) best = &c;
  return best;
}

template <CorrelationGraph G>
std::string next_hop(const G& graph, const std::string& current, const BeliefNetwork& net,
                     const RejectionLedger& ledger, const std::set<std::string>& visited) {
  const auto cands = hop_candidates(graph, current, net, ledger, visited);
  const Candidate* b = best_candidate(cands);
  if (!b) throw PreconditionError("no unvisited neighbor of '" + current + "'");
  return b->category;
}

struct ExploreOptions {
  std::size_t max_len = 0;  // 0 = number of categories
  std::set<Edge> avoid;
  std::ostream* trace = nullptr;
  std::size_t step = 0;
};

// Greedy walk from source toward target. Stops on reaching the target; on
// a dead end or after max_len nodes the target is appended.
template <CorrelationGraph G>
PromptPath explore(const G& graph, const std::string& source, const std::string& target,
                   const BeliefNetwork& net, const RejectionLedger& ledger,
                   const ExploreOptions& opt = {}) {
  if (source == target) throw PreconditionError("explore: source equals target");
  const std::size_t max_len = opt.max_len ? opt.max_len : graph.categories().size();
  PromptPath p{{source}};
  std::set<std::string> visited{source};
  while (p.nodes.back() != target && p.nodes.size() < max_len) {
    const auto cands = hop_candidates(graph, p.nodes.back(), net, ledger, visited, opt.avoid);
    const Candidate* b = best_candidate(cands);
    if (opt.trace) {
      nlohmann::json cj = nlohmann::json::array();
      for (const auto& c : cands)
        cj.push_back({{"category", c.category}, {"rho", c.rho}, {"belief", c.belief},
                      {"rej_w", c.rej_w}, {"score", c.score}});
      *opt.trace << nlohmann::json{{"step", opt.step}, {"current", p.nodes.back()},
                                   {"candidates", cj}, {"chosen", b ? b->category : ""}}
                        .dump()
                 << '\n';
    }
    if (!b) break;
    visited.insert(b->category);
    p.nodes.push_back(b->category);
  }
  if (p.nodes.back() != target) {
    if (p.nodes.size() > max_len) p.nodes.resize(max_len);
    p.nodes.push_back(target);
  }
  p.validate();
  return p;
}

// Fresh path after a terminal prompt is rejected. Until the ledger penalizes
// one of the old path's edges, re-exploring may return the same path. After
// that, if plain exploration reproduces it, explores again without its
// edges; nullopt means no distinct path exists.
template <CorrelationGraph G>
std::optional<PromptPath> reschedule(const G& graph, const BeliefNetwork& net,
                                     const RejectionLedger& ledger,
                                     const std::map<std::string, BeliefClass>& classes,
                                     const PromptPath& exhausted, ExploreOptions opt = {}) {
  const auto [s, t] = select_endpoints(net, classes);
  PromptPath p = explore(graph, s, t, net, ledger, opt);
  if (p.key() != exhausted.key()) return p;
  const auto edges = path_edges(exhausted);
  if (std::none_of(edges.begin(), edges.end(),
                   [&](const Edge& e) { return ledger.penalized_edges.count(e) > 0; }))
    return p;
  for (const auto& e : edges) opt.avoid.insert(e);
  p = explore(graph, s, t, net, ledger, opt);
  if (p.key() != exhausted.key()) return p;
  return std::nullopt;
}

}  // namespace bheisr
