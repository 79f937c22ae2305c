#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "bheisr/belief.hpp"
#include "bheisr/corpus.hpp"
#include "bheisr/error.hpp"
#include "bheisr/feed.hpp"
#include "bheisr/features.hpp"
#include "bheisr/generator.hpp"
#include "bheisr/nudge.hpp"
#include "bheisr/rng.hpp"

namespace bheisr {

enum class Model { rd, cb, uc, rd_w, cb_w, uc_w, bheisr };

enum class Baseline { rd, cb, uc };

inline const std::vector<Model>& all_models() {
  static const std::vector<Model> m = {Model::rd,   Model::cb,   Model::uc,    Model::rd_w,
                                       Model::cb_w, Model::uc_w, Model::bheisr};
  return m;
}

inline std::string to_string(Model m) {
  switch (m) {
    case Model::rd: return "RD";
    case Model::cb: return "CB";
    case Model::uc: return "UC";
    case Model::rd_w: return "RD_wC";
    case Model::cb_w: return "CB_wC";
    case Model::uc_w: return "UC_wC";
    case Model::bheisr: return "BHEISR";
  }
  return "?";
}

inline Model model_from_string(std::string s) {
  for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (s.size() > 3 && s.substr(s.size() - 3) == "_wc") s.pop_back();
  if (s == "rd") return Model::rd;
  if (s == "cb") return Model::cb;
  if (s == "uc") return Model::uc;
  if (s == "rd_w") return Model::rd_w;
  if (s == "cb_w") return Model::cb_w;
  if (s == "uc_w") return Model::uc_w;
  if (s == "bheisr") return Model::bheisr;
  throw Error("unknown model '" + s + "'");
}

inline bool mixes_generated(Model m) {
  return m == Model::rd_w || m == Model::cb_w || m == Model::uc_w || m == Model::bheisr;
}

inline Baseline baseline_of(Model m) {
  switch (m) {
    case Model::cb:
    case Model::cb_w: return Baseline::cb;
    case Model::uc:
    case Model::uc_w: return Baseline::uc;
    default: return Baseline::rd;
  }
}

// Paired plain baseline of a mixed model (itself for plain ones).
inline Model paired_baseline(Model m) {
  switch (m) {
    case Model::rd_w: return Model::rd;
    case Model::cb_w: return Model::cb;
    case Model::uc_w: return Model::uc;
    default: return m;
  }
}

// Read-only view used while assembling feeds for one step.
struct RecContext {
  const Corpus& corpus;
  const std::vector<FeatureVector>& item_vectors;  // aligned with corpus.items()
  const std::map<std::string, FeatureVector>& generated_vectors;
  const std::map<std::string, BeliefNetwork>& snapshot;

  const FeatureVector& vector_of(const std::string& id) const {
    if (corpus.has_item(id)) return item_vectors[corpus.item_position(id)];
    auto it = generated_vectors.find(id);
    if (it == generated_vectors.end()) throw UnknownKeyError("no vector for item '" + id + "'");
    return it->second;
  }
};

struct Candidates {
  std::vector<const Item*> items;
  bool short_pool = false;
};

inline std::vector<const Item*> eligible_items(const Corpus& corpus, const BeliefNetwork& net) {
  std::vector<const Item*> out;
  out.reserve(corpus.items().size());
  for (const auto& it : corpus.items())
    if (!net.has_accepted(it.id)) out.push_back(&it);
  return out;
}

// k items uniformly without replacement, in seeded shuffle order.
inline Candidates rd_candidates(const Corpus& corpus, const BeliefNetwork& net, std::size_t k,
                                RngStream& rng) {
  Candidates c{eligible_items(corpus, net), false};
  shuffle(c.items, rng);
  if (c.items.size() < k) c.short_pool = true;
  else c.items.resize(k);
  return c;
}

// Mean vector of the user's accepted items.
inline FeatureVector user_profile(const BeliefNetwork& net, const RecContext& ctx) {
  if (net.accepted().empty()) return {};
  std::map<std::uint32_t, double> sum;
  for (const auto& id : net.accepted())
    for (const auto& [t, w] : ctx.vector_of(id).entries()) sum[t] += w;
  const double n = static_cast<double>(net.accepted().size());
  std::vector<FeatureVector::Entry> e;
  for (const auto& [t, s] : sum) e.emplace_back(t, s / n);
  return FeatureVector(std::move(e));
}

inline double cb_score(const FeatureVector& item, const FeatureVector& profile) {
  return correlation(item, profile);
}

inline double cb_score(const Item& item, const BeliefNetwork& net, const RecContext& ctx) {
  if (net.accepted().empty()) return 0.0;
  return cb_score(ctx.vector_of(item.id), user_profile(net, ctx));
}

// sum_C w_C B(C) / sum B, the belief weight of an item for one user.
inline double belief_share(const Item& item, const BeliefNetwork& net) {
  const double total = net.belief_sum();
  if (!(total > 0)) return 0.0;
  double s = 0;
  for (const auto& [c, w] : item.category_weights) s += w * net.belief_degree(c);
  return s / total;
}

// Who accepted what, and each user's category-mass vector, at step start.
class UcIndex {
 public:
  explicit UcIndex(const std::map<std::string, BeliefNetwork>& snapshot) {
    for (const auto& [u, n] : snapshot) {
      std::vector<double> h;
      double s = 0;
      for (const auto& c : n.categories()) {
        h.push_back(n.category_mass(c));
        s += h.back() * h.back();
      }
      hist_[u] = {std::move(h), std::sqrt(s)};
      for (const auto& id : n.accepted()) acceptors_[id].push_back(u);
    }
  }

  double similarity(const std::string& a, const std::string& b) const {
    const auto& x = hist_.at(a);
    const auto& y = hist_.at(b);
    if (x.norm == 0 || y.norm == 0) return 0.0;
    double d = 0;
    for (std::size_t i = 0; i < x.v.size(); ++i) d += x.v[i] * y.v[i];
    return d / (x.norm * y.norm);
  }

  const std::vector<std::string>& acceptors(const std::string& item) const {
    static const std::vector<std::string> none;
    auto it = acceptors_.find(item);
    return it == acceptors_.end() ? none : it->second;
  }

 private:
  struct Hist {
    std::vector<double> v;
    double norm = 0;
  };
  std::map<std::string, Hist> hist_;
  std::unordered_map<std::string, std::vector<std::string>> acceptors_;
};

inline double uc_score(const Item& item, const std::string& user, const BeliefNetwork& net,
                       const UcIndex& index) {
  double sim = 0;
  for (const auto& j : index.acceptors(item.id))
    if (j != user) sim += index.similarity(user, j);
  if (sim == 0) return 0.0;
  return sim * belief_share(item, net);
}

struct Scored {
  const Item* item;
  double score;
};

// Descending score, ties by id.
inline std::vector<const Item*> top_k(std::vector<Scored> s, std::size_t k) {
  auto cmp = [](const Scored& a, const Scored& b) {
    return a.score != b.score ? a.score > b.score : a.item->id < b.item->id;
  };
  if (s.size() > k) {
    std::partial_sort(s.begin(), s.begin() + static_cast<long>(k), s.end(), cmp);
    s.resize(k);
  } else {
    std::sort(s.begin(), s.end(), cmp);
  }
  std::vector<const Item*> out;
  for (const auto& x : s) out.push_back(x.item);
  return out;
}

struct FeedRequest {
  Model model = Model::cb;
  double w = 0.6;
  std::size_t k = 10;
  std::size_t step = 0;
};

// Baseline items (by score, or sampled for RD) followed by generated items
// for distinct pending prompts. A cold user's CB/UC feed falls back to RD,
// as does a BHEISR feed once the session is terminal.
inline Feed assemble_feed(const FeedRequest& req, const std::string& user, const RecContext& ctx,
                          const UcIndex* uc, NudgeSession* session, const GeneratorPort* gen,
                          std::uint64_t run_seed, std::vector<std::string>* notes = nullptr) {
  if (req.k < 1) throw PreconditionError("k must be >= 1");
  if (req.w < 0 || req.w > 1) throw PreconditionError("w must be in [0,1]");
  const BeliefNetwork& net = ctx.snapshot.at(user);
  Feed feed;
  feed.step = req.step;
  const double w = req.model == Model::bheisr ? 1.0 : req.w;
  feed.w = w;

  std::vector<Item> generated;
  if (mixes_generated(req.model) && session && !session->terminal && gen) {
    const auto n_gen = static_cast<std::size_t>(std::lround(w * static_cast<double>(req.k)));
    std::size_t j = 0;
    for (const auto& p : session->pending_prompts(n_gen)) {
      auto out = run_step(*session, *gen, combine_seed(user_seed(run_seed, user), req.step * 64 + j++), &p);
      if (out.fell_back && notes) notes->push_back(user + ": generator fallback: " + out.note);
      generated.push_back(std::move(out.item));
    }
  }
  const std::size_t n_orig = req.k - generated.size();

  std::vector<const Item*> base;
  if (n_orig > 0) {
    Baseline b = baseline_of(req.model);
    if (b != Baseline::rd && net.cold()) b = Baseline::rd;
    if (b == Baseline::uc && !uc) throw PreconditionError("UC feed needs an index");
    if (b == Baseline::rd) {
      RngStream rng = step_stream(run_seed, user, req.step, 1);
      auto c = rd_candidates(ctx.corpus, net, n_orig, rng);
      feed.short_pool = c.short_pool;
      base = std::move(c.items);
    } else {
      const auto items = eligible_items(ctx.corpus, net);
      std::vector<Scored> s;
      s.reserve(items.size());
      if (b == Baseline::cb) {
        const FeatureVector profile = user_profile(net, ctx);
        for (const Item* it : items)
          s.push_back({it, cb_score(ctx.item_vectors[ctx.corpus.item_position(it->id)], profile)});
      } else {
        for (const Item* it : items) s.push_back({it, uc_score(*it, user, net, *uc)});
      }
      feed.short_pool = s.size() < n_orig;
      base = top_k(std::move(s), n_orig);
    }
  }
  if (base.empty() && generated.empty()) throw PreconditionError("empty candidate pool");
  for (const Item* it : base) feed.items.push_back(*it);
  feed.original_count = base.size();
  feed.generated_count = generated.size();
  for (auto& g : generated) feed.items.push_back(std::move(g));
  return feed;
}

}  // namespace bheisr
