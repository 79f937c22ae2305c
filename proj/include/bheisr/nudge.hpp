#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bheisr/belief.hpp"
#include "bheisr/error.hpp"
#include "bheisr/fbdmr.hpp"
#include "bheisr/features.hpp"
#include "bheisr/generator.hpp"
#include "bheisr/pathfinder.hpp"

namespace bheisr {

// Literal half slices; the middle node of an odd path is dropped. A
// one-node half borrows its neighbor from the parent (left half extends
// right, right half extends left). Length 2 is terminal.
inline std::optional<std::pair<PromptPath, PromptPath>> binary_split(const PromptPath& p) {
  const std::size_t L = p.size();
  if (L < 2) throw InvariantError("binary_split on a path shorter than 2");
  if (L == 2) return std::nullopt;
  std::size_t a_end, b_begin;
  if (L % 2 == 1) a_end = (L - 1) / 2, b_begin = (L + 1) / 2;
  else a_end = b_begin = L / 2;
  PromptPath a{{p.nodes.begin(), p.nodes.begin() + static_cast<long>(a_end)}};
  PromptPath b{{p.nodes.begin() + static_cast<long>(b_begin), p.nodes.end()}};
  if (a.size() == 1) a.nodes.push_back(p.nodes[1]);
  if (b.size() == 1) b.nodes.insert(b.nodes.begin(), p.nodes[L - 2]);
  return std::make_pair(std::move(a), std::move(b));
}

inline std::vector<PromptPath> initial_queue(const PromptPath& path) {
  if (auto s = binary_split(path)) return {s->first, s->second};
  return {path};
}

enum class QueueDiscipline { front, back };

struct NudgeEvent {
  std::string prompt_key;
  std::string item_id;
  bool accepted = false;
  std::size_t step = 0;
  std::size_t seq = 0;  // strictly increasing within a session
};

// Algorithm state for one FB-affected user. Classes are frozen at start;
// endpoints are re-chosen from them with current beliefs.
struct NudgeSession {
  std::string user_id;
  PromptPath path;
  std::vector<PromptPath> queue;
  RejectionLedger ledger;
  std::map<std::string, BeliefClass> classes;
  std::vector<NudgeEvent> history;
  QueueDiscipline discipline = QueueDiscipline::front;
  bool terminal = false;
  std::size_t reschedules = 0;
  std::size_t generated = 0;

  bool pending(const std::string& key) const {
    return std::any_of(queue.begin(), queue.end(), [&](const PromptPath& p) { return p.key() == key; });
  }

  // First n distinct prompts from the front of the queue.
  std::vector<PromptPath> pending_prompts(std::size_t n) const {
    std::vector<PromptPath> out;
    for (const auto& p : queue) {
      if (out.size() >= n) break;
      if (std::none_of(out.begin(), out.end(), [&](const PromptPath& q) { return q.key() == p.key(); }))
        out.push_back(p);
    }
    return out;
  }
};

template <CorrelationGraph G>
NudgeSession start_session(const G& graph, const BeliefNetwork& net,
                           const std::map<std::string, BeliefClass>& classes,
                           std::optional<std::size_t> theta = 2,
                           QueueDiscipline discipline = QueueDiscipline::front,
                           std::ostream* trace = nullptr) {
  NudgeSession s;
  s.user_id = net.user_id();
  s.classes = classes;
  s.ledger.theta = theta;
  s.discipline = discipline;
  const auto [src, dst] = select_endpoints(net, classes);
  ExploreOptions opt;
  opt.trace = trace;
  s.path = explore(graph, src, dst, net, s.ledger, opt);
  s.queue = initial_queue(s.path);
  return s;
}

inline std::string generated_item_id(const std::string& user, std::size_t n) {
  return "G-" + user + "-" + std::to_string(n);
}

// Generated item for a pending prompt (the head by default). Does not
// consume the prompt.
inline GenerationOutcome run_step(NudgeSession& s, const GeneratorPort& gen, std::uint64_t seed,
                                  const PromptPath* prompt = nullptr) {
  if (s.queue.empty()) throw PreconditionError("nudge queue is empty; reschedule needed");
  const PromptPath& p = prompt ? *prompt : s.queue.front();
  GenerationRequest req{p, generated_item_id(s.user_id, ++s.generated), seed};
  return gen.generate(req);
}

struct FeedbackResult {
  bool stale = false;        // prompt no longer queued (session was rescheduled)
  bool rescheduled = false;
  bool became_terminal = false;
};

// Applies one decision on a generated item. Beliefs are updated here; the
// category graph only when `live_graph` is given (otherwise the caller
// batches graph updates). `graph` is what rescheduling explores.
template <CorrelationGraph G>
FeedbackResult apply_feedback(NudgeSession& s, const Item& item, bool accepted, const G& graph,
                              BeliefNetwork& net, std::size_t step,
                              CategoryGraph* live_graph = nullptr, const Embedder* embed = nullptr,
                              bool allow_stale = false) {
  if (item.origin != Origin::generated) throw PreconditionError("feedback item is not generated");
  FeedbackResult r;
  auto it = std::find_if(s.queue.begin(), s.queue.end(),
                         [&](const PromptPath& p) { return p.key() == item.prompt_key; });
  if (it == s.queue.end()) {
    if (!allow_stale) throw InvariantError("item '" + item.id + "' does not match a queued prompt");
    r.stale = true;
  }
  net.update_on_feedback(item, accepted, &item.prompt_key);
  s.history.push_back({item.prompt_key, item.id, accepted, step, s.history.size()});
  if (accepted && live_graph) live_graph->accept_item_update(item, embed->embed(item));

  PromptPath prompt;
  prompt.nodes = split(item.prompt_key, '>');
  if (!accepted) record_rejection(s.ledger, prompt);
  if (r.stale) return r;

  const auto idx = static_cast<std::size_t>(it - s.queue.begin());
  if (accepted) {
    s.queue.erase(s.queue.begin() + static_cast<long>(idx));
    if (s.queue.empty()) {
      const auto [src, dst] = select_endpoints(net, s.classes);
      s.path = explore(graph, src, dst, net, s.ledger);
      s.queue = initial_queue(s.path);
    }
    return r;
  }
  if (auto halves = binary_split(prompt)) {
    s.queue.erase(s.queue.begin() + static_cast<long>(idx));
    if (s.discipline == QueueDiscipline::front) {
      s.queue.insert(s.queue.begin() + static_cast<long>(idx), {halves->first, halves->second});
    } else {
      s.queue.push_back(halves->first);
      s.queue.push_back(halves->second);
    }
    return r;
  }
  r.rescheduled = true;
  ++s.reschedules;
  if (auto next = reschedule(graph, net, s.ledger, s.classes, s.path)) {
    s.path = *next;
    s.queue = initial_queue(s.path);
  } else {
    s.terminal = true;
    s.queue.clear();
    r.became_terminal = true;
  }
  return r;
}

}  // namespace bheisr
