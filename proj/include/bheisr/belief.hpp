#pragma once

#include <cmath>
#include <map>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "bheisr/corpus.hpp"
#include "bheisr/error.hpp"

namespace bheisr {

inline std::string generated_subcategory(const std::string& category) {
  return category + "/generated";
}

// c * log2(c), with 0 log 0 = 0.
inline double xlog2x(double c) { return c > 0 ? c * std::log2(c) : 0.0; }

// Per-user subcategory click mass and the entropy belief degree of each
// category. Probabilities are normalized over every subcategory the user
// touched, so a category's entropy is taken over sub-unit mass.
//
// Beliefs are maintained incrementally from per-category mass M and
// S = sum c log2 c:  B = -S/T + (M/T) log2 T  with T the total mass.
class BeliefNetwork {
 public:
  BeliefNetwork() = default;

  BeliefNetwork(std::string user_id, const std::vector<std::string>& categories)
      : user_id_(std::move(user_id)) {
    for (const auto& c : categories) cats_[c];
  }

  const std::string& user_id() const noexcept { return user_id_; }
  bool cold() const noexcept { return total_ <= 0; }
  double total_mass() const noexcept { return total_; }

  std::vector<std::string> categories() const {
    std::vector<std::string> out;
    for (const auto& [c, _] : cats_) out.push_back(c);
    return out;
  }

  bool knows(const std::string& category) const { return cats_.count(category) > 0; }

  double belief_degree(const std::string& category) const {
    auto it = cats_.find(category);
    if (it == cats_.end()) throw UnknownKeyError("unknown category '" + category + "'");
    return belief_of(it->second);
  }

  std::map<std::string, double> beliefs() const {
    std::map<std::string, double> out;
    for (const auto& [c, s] : cats_) out[c] = belief_of(s);
    return out;
  }

  double belief_sum() const {
    double s = 0;
    for (const auto& [_, st] : cats_) s += belief_of(st);
    return s;
  }

  // Flat subcategory -> count view.
  std::map<std::string, double> click_counts() const {
    std::map<std::string, double> out;
    for (const auto& [_, s] : cats_)
      for (const auto& [sub, n] : s.counts) out[sub] = n;
    return out;
  }

  std::map<std::string, double> click_probs() const {
    std::map<std::string, double> out;
    for (const auto& [_, s] : cats_)
      for (const auto& [sub, n] : s.counts) out[sub] = total_ > 0 ? n / total_ : 0.0;
    return out;
  }

  // Click mass in one category (sum of its subcategory counts).
  double category_mass(const std::string& category) const {
    auto it = cats_.find(category);
    if (it == cats_.end()) throw UnknownKeyError("unknown category '" + category + "'");
    return it->second.mass;
  }

  const std::map<std::string, double>& subcategory_counts(const std::string& category) const {
    auto it = cats_.find(category);
    if (it == cats_.end()) throw UnknownKeyError("unknown category '" + category + "'");
    return it->second.counts;
  }

  const std::vector<std::string>& accepted() const noexcept { return accepted_; }
  bool has_accepted(const std::string& item_id) const { return accepted_set_.count(item_id) > 0; }
  const std::vector<std::string>& declined_prompts() const noexcept { return declined_; }

  void add_clicks(const std::string& category, const std::string& subcategory, double mass) {
    auto it = cats_.find(category);
    if (it == cats_.end()) throw UnknownKeyError("unknown category '" + category + "'");
    if (mass <= 0) return;
    auto& st = it->second;
    double& c = st.counts[subcategory];
    st.slog += xlog2x(c + mass) - xlog2x(c);
    c += mass;
    st.mass += mass;
    total_ += mass;
  }

  // Accepted items add click mass (dataset items: 1 to their subcategory;
  // generated items: weight w to "category/generated" per category).
  // Rejections with a prompt only extend the declined list.
  void update_on_feedback(const Item& item, bool accepted, const std::string* prompt_key = nullptr) {
    if (accepted) {
      if (accepted_set_.insert(item.id).second) accepted_.push_back(item.id);
      if (item.origin == Origin::dataset) {
        add_clicks(item.category, item.subcategory, 1.0);
      } else {
        for (const auto& [c, w] : item.category_weights) add_clicks(c, generated_subcategory(c), w);
      }
    } else if (prompt_key) {
      declined_.push_back(*prompt_key);
    }
  }

  void record_history_item(const std::string& item_id) {
    if (accepted_set_.insert(item_id).second) accepted_.push_back(item_id);
  }

  // Direct entropy over globally normalized probabilities.
  std::map<std::string, double> recompute_from_scratch() const {
    std::map<std::string, double> out;
    for (const auto& [c, s] : cats_) {
      double b = 0;
      for (const auto& [_, n] : s.counts) {
        if (n <= 0) continue;
        const double r = n / total_;
        b -= r * std::log2(r);
      }
      out[c] = b;
    }
    return out;
  }

  nlohmann::json snapshot() const {
    nlohmann::json b = nlohmann::json::object(), p = nlohmann::json::object();
    for (const auto& [c, v] : beliefs()) b[c] = v;
    for (const auto& [s, v] : click_probs()) p[s] = v;
    return {{"user_id", user_id_}, {"belief", b}, {"probs", p}};
  }

 private:
  struct CategoryState {
    std::map<std::string, double> counts;
    double mass = 0;
    double slog = 0;
  };

  double belief_of(const CategoryState& s) const {
    if (total_ <= 0 || s.mass <= 0) return 0.0;
    const double b = -s.slog / total_ + s.mass / total_ * std::log2(total_);
    return b < 0 ? 0.0 : b;  // rounding on a single-subcategory mass
  }

  std::string user_id_;
  std::map<std::string, CategoryState> cats_;
  double total_ = 0;
  std::vector<std::string> accepted_;
  std::unordered_set<std::string> accepted_set_;
  std::vector<std::string> declined_;
};

// Interested interactions become unit clicks on the item's subcategory; the
// interested items seed the accepted list in timestamp order.
inline BeliefNetwork build_from_history(const Corpus& corpus, const std::string& user_id) {
  if (!corpus.users().count(user_id)) throw UnknownKeyError("unknown user '" + user_id + "'");
  BeliefNetwork net(user_id, corpus.categories());
  for (const Interaction* x : corpus.history(user_id)) {
    if (!corpus.interested(*x)) continue;
    const Item& it = corpus.item(x->item_id);
    net.add_clicks(it.category, it.subcategory, 1.0);
    net.record_history_item(it.id);
  }
  return net;
}

inline std::map<std::string, BeliefNetwork> build_all(const Corpus& corpus) {
  std::map<std::string, BeliefNetwork> out;
  for (const auto& u : corpus.users()) out.emplace(u, build_from_history(corpus, u));
  return out;
}

}  // namespace bheisr
