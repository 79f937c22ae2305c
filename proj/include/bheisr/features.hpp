#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "bheisr/corpus.hpp"
#include "bheisr/error.hpp"
#include "bheisr/text.hpp"

namespace bheisr {

// Sparse vector, entries sorted by term id.
class FeatureVector {
 public:
  using Entry = std::pair<std::uint32_t, double>;

  FeatureVector() = default;
  explicit FeatureVector(std::vector<Entry> entries) : entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& a, const Entry& b) { return a.first < b.first; });
    std::vector<Entry> merged;
    for (const auto& e : entries_) {
      if (!merged.empty() && merged.back().first == e.first) merged.back().second += e.second;
      else merged.push_back(e);
    }
    std::erase_if(merged, [](const Entry& e) { return e.second == 0.0; });
    entries_ = std::move(merged);
    double s = 0.0;
    for (const auto& [_, w] : entries_) s += w * w;
    norm_ = std::sqrt(s);
  }

  const std::vector<Entry>& entries() const noexcept { return entries_; }
  double norm() const noexcept { return norm_; }
  bool empty() const noexcept { return entries_.empty(); }

  double get(std::uint32_t term) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), term,
                               [](const Entry& e, std::uint32_t t) { return e.first < t; });
    return it != entries_.end() && it->first == term ? it->second : 0.0;
  }

  double dot(const FeatureVector& o) const {
    double s = 0.0;
    auto a = entries_.begin(), b = o.entries_.begin();
    while (a != entries_.end() && b != o.entries_.end()) {
      if (a->first < b->first) ++a;
      else if (b->first < a->first) ++b;
      else s += (a++)->second * (b++)->second;
    }
    return s;
  }

  bool operator==(const FeatureVector& o) const { return entries_ == o.entries_; }

 private:
  std::vector<Entry> entries_;
  double norm_ = 0.0;
};

// Cosine similarity; 0 when either side has no content.
inline double correlation(const FeatureVector& a, const FeatureVector& b) {
  if (a.norm() == 0.0 || b.norm() == 0.0) return 0.0;
  const double c = a.dot(b) / (a.norm() * b.norm());
  return std::clamp(c, -1.0, 1.0);
}

// Term ids in lexicographic order, document frequencies over the corpus
// items. Fixed once built; text from later items (generated ones) only uses
// known terms.
class Vocabulary {
 public:
  Vocabulary() = default;

  explicit Vocabulary(const std::vector<std::vector<std::string>>& docs) : n_docs_(docs.size()) {
    std::map<std::string, std::size_t> df;
    for (const auto& d : docs) {
      std::vector<std::string> uniq = d;
      std::sort(uniq.begin(), uniq.end());
      uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
      for (const auto& t : uniq) ++df[t];
    }
    for (const auto& [t, n] : df) {
      ids_.emplace(t, static_cast<std::uint32_t>(terms_.size()));
      terms_.push_back(t);
      df_.push_back(n);
    }
  }

  static Vocabulary from_corpus(const Corpus& c) {
    std::vector<std::vector<std::string>> docs;
    docs.reserve(c.items().size());
    for (const auto& it : c.items()) docs.push_back(tokenize(it.text()));
    return Vocabulary(docs);
  }

  std::size_t size() const noexcept { return terms_.size(); }
  std::size_t n_docs() const noexcept { return n_docs_; }
  const std::string& term(std::uint32_t id) const { return terms_.at(id); }

  std::optional<std::uint32_t> id(const std::string& term) const {
    auto it = ids_.find(term);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t df(std::uint32_t id) const { return df_.at(id); }

  double idf(std::uint32_t id) const {
    return std::log((1.0 + static_cast<double>(n_docs_)) / (1.0 + static_cast<double>(df_.at(id)))) +
           1.0;
  }

 private:
  std::size_t n_docs_ = 0;
  std::vector<std::string> terms_;
  std::vector<std::size_t> df_;
  std::map<std::string, std::uint32_t> ids_;
};

// tf = count / token count, weighted by smoothed idf.
inline FeatureVector featurize_tokens(const std::vector<std::string>& tokens, const Vocabulary& v) {
  if (tokens.empty()) return {};
  std::map<std::uint32_t, std::size_t> counts;
  for (const auto& t : tokens)
    if (auto id = v.id(t)) ++counts[*id];
  std::vector<FeatureVector::Entry> e;
  const double len = static_cast<double>(tokens.size());
  for (const auto& [id, n] : counts) e.emplace_back(id, static_cast<double>(n) / len * v.idf(id));
  return FeatureVector(std::move(e));
}

inline FeatureVector featurize(const Item& item, const Vocabulary& v) {
  return featurize_tokens(tokenize(item.text()), v);
}

// Swappable item embedding. The default is TF-IDF over a fixed vocabulary.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual FeatureVector embed(const Item& item) const = 0;
};

class TfidfEmbedder : public Embedder {
 public:
  explicit TfidfEmbedder(std::shared_ptr<const Vocabulary> vocab) : vocab_(std::move(vocab)) {}
  FeatureVector embed(const Item& item) const override { return featurize(item, *vocab_); }
  const Vocabulary& vocabulary() const { return *vocab_; }

 private:
  std::shared_ptr<const Vocabulary> vocab_;
};

// What path exploration needs from a graph.
template <class G>
concept CorrelationGraph = requires(const G& g, const std::string& a) {
  { g.categories() } -> std::convertible_to<std::vector<std::string>>;
  { g.rho(a, a) } -> std::convertible_to<double>;
};

// Category nodes carry the mean vector of their members; edges hold ρ for
// every unordered pair. Member sums are accumulated in membership order, so
// an incremental update and a full rebuild give bitwise-identical results.
class CategoryGraph {
 public:
  struct Node {
    std::map<std::uint32_t, double> sum;
    std::vector<std::string> members;
    FeatureVector vector;
  };

  CategoryGraph() = default;

  explicit CategoryGraph(const std::vector<std::string>& categories) {
    for (const auto& c : categories) nodes_[c];
  }

  // Every dataset item joins its categories, then edges are computed.
  static CategoryGraph build(const Corpus& corpus, const Embedder& embed) {
    CategoryGraph g(corpus.categories());
    for (const auto& it : corpus.items()) g.add_member(it, embed.embed(it));
    for (auto& [c, _] : g.nodes_) g.refresh_vector(c);
    g.rebuild_edges();
    return g;
  }

  // Fixed-edge graph with no vectors; edges not listed are 0.
  static CategoryGraph from_edges(const std::vector<std::string>& categories,
                                  const std::map<std::pair<std::string, std::string>, double>& rho) {
    CategoryGraph g(categories);
    g.fixed_ = true;
    for (const auto& [k, v] : rho) {
      if (!g.nodes_.count(k.first) || !g.nodes_.count(k.second))
        throw UnknownKeyError("edge references unknown category");
      g.edges_[ordered(k.first, k.second)] = v;
    }
    return g;
  }

  std::vector<std::string> categories() const {
    std::vector<std::string> out;
    for (const auto& [c, _] : nodes_) out.push_back(c);
    return out;
  }

  bool has(const std::string& c) const { return nodes_.count(c) > 0; }

  const Node& node(const std::string& c) const {
    auto it = nodes_.find(c);
    if (it == nodes_.end()) throw UnknownKeyError("unknown category '" + c + "'");
    return it->second;
  }

  const FeatureVector& category_vector(const std::string& c) const { return node(c).vector; }

  double rho(const std::string& a, const std::string& b) const {
    node(a);
    node(b);
    if (a == b) return fixed_ || node(a).vector.norm() > 0 ? 1.0 : 0.0;
    auto it = edges_.find(ordered(a, b));
    return it == edges_.end() ? 0.0 : it->second;
  }

  const std::map<std::pair<std::string, std::string>, double>& edges() const { return edges_; }

  const FeatureVector& member_vector(const std::string& item_id) const {
    auto it = item_vectors_.find(item_id);
    if (it == item_vectors_.end()) throw UnknownKeyError("unknown member '" + item_id + "'");
    return it->second;
  }

  void rebuild_edges() {
    if (fixed_) return;
    edges_.clear();
    const auto cats = categories();
    for (std::size_t i = 0; i < cats.size(); ++i)
      for (std::size_t j = i + 1; j < cats.size(); ++j) set_edge(cats[i], cats[j]);
  }

  // Recomputes every category vector from its membership, then all edges.
  void rebuild() {
    for (auto& [c, n] : nodes_) {
      n.sum.clear();
      for (const auto& id : n.members)
        for (const auto& [t, w] : item_vectors_.at(id).entries()) n.sum[t] += w;
      refresh_vector(c);
    }
    rebuild_edges();
  }

  // Appends the item to each category it weights and refreshes those
  // categories' vectors and incident edges.
  void accept_item_update(const Item& item, const FeatureVector& v) {
    for (const auto& [c, w] : item.category_weights)
      if (w > 0 && !nodes_.count(c)) throw UnknownKeyError("unknown category '" + c + "'");
    std::vector<std::string> touched = add_member(item, v);
    for (const auto& c : touched) refresh_vector(c);
    if (fixed_) return;
    for (const auto& c : touched)
      for (const auto& [o, _] : nodes_)
        if (o != c) set_edge(c, o);
  }

  nlohmann::json to_json(const Vocabulary* vocab = nullptr) const {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& [c, n] : nodes_) {
      nlohmann::json vec = nlohmann::json::object();
      for (const auto& [t, w] : n.vector.entries())
        vec[vocab ? vocab->term(t) : std::to_string(t)] = w;
      nodes.push_back({{"category", c}, {"members", n.members.size()}, {"vector", vec}});
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& [k, v] : edges_)
      edges.push_back({{"pair", {k.first, k.second}}, {"rho", v}});
    return {{"nodes", nodes}, {"edges", edges}};
  }

 private:
  static std::pair<std::string, std::string> ordered(const std::string& a, const std::string& b) {
    return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  }

  std::vector<std::string> add_member(const Item& item, const FeatureVector& v) {
    std::vector<std::string> touched;
    item_vectors_[item.id] = v;
    for (const auto& [c, w] : item.category_weights) {
      if (w <= 0) continue;
      auto& n = nodes_.at(c);
      n.members.push_back(item.id);
      for (const auto& [t, x] : v.entries()) n.sum[t] += x;
      touched.push_back(c);
    }
    return touched;
  }

  void refresh_vector(const std::string& c) {
    auto& n = nodes_.at(c);
    if (n.members.empty()) {
      n.vector = {};
      return;
    }
    const double k = static_cast<double>(n.members.size());
    std::vector<FeatureVector::Entry> e;
    e.reserve(n.sum.size());
    for (const auto& [t, s] : n.sum) e.emplace_back(t, s / k);
    n.vector = FeatureVector(std::move(e));
  }

  void set_edge(const std::string& a, const std::string& b) {
    const auto& va = nodes_.at(a).vector;
    const auto& vb = nodes_.at(b).vector;
    if (va.norm() == 0 || vb.norm() == 0) {
      edges_.erase(ordered(a, b));
      return;
    }
    edges_[ordered(a, b)] = correlation(va, vb);
  }

  std::map<std::string, Node> nodes_;
  std::map<std::pair<std::string, std::string>, double> edges_;
  std::map<std::string, FeatureVector> item_vectors_;
  bool fixed_ = false;
};

static_assert(CorrelationGraph<CategoryGraph>);

}  // namespace bheisr
