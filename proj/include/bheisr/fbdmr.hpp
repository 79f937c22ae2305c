#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bheisr/belief.hpp"
#include "bheisr/error.hpp"
#include "bheisr/feed.hpp"
#include "bheisr/stats.hpp"
#include "bheisr/text.hpp"

namespace bheisr {

// Share of the category space a feed touches. Generated items count every
// category they weight.
inline double diversity_coverage(const Feed& feed, std::size_t n_categories) {
  if (feed.items.empty()) throw PreconditionError("diversity_coverage: empty feed");
  if (n_categories == 0) throw PreconditionError("diversity_coverage: no categories");
  std::set<std::string> seen;
  for (const auto& it : feed.items)
    for (const auto& [c, w] : it.category_weights)
      if (w > 0) seen.insert(c);
  return static_cast<double>(seen.size()) / static_cast<double>(n_categories);
}

inline double diversity_coverage(const Feed& feed, const Taxonomy& taxonomy) {
  return diversity_coverage(feed, taxonomy.size());
}

// (1/N) sum (1 - f_i / F) over the N subcategories with nonzero frequency.
inline double diversity_coverage_formula(const std::map<std::string, double>& freq) {
  double total = 0;
  std::size_t n = 0;
  for (const auto& [_, f] : freq) {
    if (f < 0) throw PreconditionError("negative subcategory frequency");
    if (f > 0) total += f, ++n;
  }
  if (n == 0) throw PreconditionError("diversity_coverage_formula: all frequencies zero");
  double s = 0;
  for (const auto& [_, f] : freq)
    if (f > 0) s += 1.0 - f / total;
  return s / static_cast<double>(n);
}

inline std::map<std::string, double> subcategory_frequencies(const Feed& feed) {
  std::map<std::string, double> f;
  for (const auto& it : feed.items) f[it.subcategory] += 1;
  return f;
}

// Fraction of ordered item pairs that share a subcategory.
inline double diversity_duplicate(const Feed& feed) {
  const std::size_t n = feed.items.size();
  if (n < 2) throw PreconditionError("diversity_duplicate: need at least 2 items");
  std::size_t same = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && feed.items[i].subcategory == feed.items[j].subcategory) ++same;
  return static_cast<double>(same) / static_cast<double>(n * (n - 1));
}

struct WindowShare {
  std::size_t window = 0;  // 0-based
  std::map<std::string, double> share;
};

// Category shares per block of `window` consecutive feeds; a trailing
// partial block is kept. Items contribute their category weights.
inline std::vector<WindowShare> time_evolution_report(const std::vector<Feed>& feeds,
                                                      std::size_t window) {
  if (window == 0) throw PreconditionError("window must be positive");
  if (window > feeds.size()) throw PreconditionError("window exceeds number of feeds");
  std::vector<WindowShare> out;
  for (std::size_t start = 0; start < feeds.size(); start += window) {
    WindowShare ws{out.size(), {}};
    double total = 0;
    for (std::size_t f = start; f < std::min(feeds.size(), start + window); ++f)
      for (const auto& it : feeds[f].items)
        for (const auto& [c, w] : it.category_weights) ws.share[c] += w, total += w;
    if (total > 0)
      for (auto& [_, v] : ws.share) v /= total;
    out.push_back(std::move(ws));
  }
  return out;
}

enum class BeliefClass { Normal, ExtremeLow, ExtremeHigh };

inline const char* to_string(BeliefClass c) {
  switch (c) {
    case BeliefClass::ExtremeLow: return "ExtremeLow";
    case BeliefClass::ExtremeHigh: return "ExtremeHigh";
    default: return "Normal";
  }
}

struct CategoryStats {
  double mu = 0, sigma = 0;
  double low = 0, high = 0;  // thresholds
  double K = 0, p = 1, skewness = 0;
  bool degenerate = false;  // zero variance
};

using UserClasses = std::map<std::string, std::map<std::string, BeliefClass>>;

struct Classification {
  std::map<std::string, CategoryStats> stats;
  UserClasses classes;
  std::set<std::string> fb_users;
};

inline bool is_fb_affected(const std::map<std::string, BeliefClass>& cls) {
  bool hi = false, lo = false;
  for (const auto& [_, c] : cls) {
    hi |= c == BeliefClass::ExtremeHigh;
    lo |= c == BeliefClass::ExtremeLow;
  }
  return hi && lo;
}

inline constexpr std::size_t kMinClassifiedUsers = 8;

// Two-sigma rule per category over the given users. A category where every
// user has the same belief is all Normal.
inline Classification classify_users(
    const std::map<std::string, std::map<std::string, double>>& beliefs,
    const std::vector<std::string>& categories) {
  if (beliefs.size() < kMinClassifiedUsers)
    throw PreconditionError("classify_users: need at least 8 users with nonzero networks");
  Classification out;
  for (const auto& cat : categories) {
    std::vector<double> xs;
    xs.reserve(beliefs.size());
    for (const auto& [_, b] : beliefs) {
      auto it = b.find(cat);
      xs.push_back(it == b.end() ? 0.0 : it->second);
    }
    CategoryStats st;
    st.mu = mean(xs);
    st.sigma = stddev(xs);
    st.low = std::max(st.mu - 2 * st.sigma, 0.0);
    st.high = st.mu + 2 * st.sigma;
    st.degenerate = !(st.sigma > 0);
    if (!st.degenerate) {
      auto ks = ks_normality(xs, st.mu, st.sigma);
      st.K = ks.K;
      st.p = ks.p;
      st.skewness = skewness(xs);
    }
    std::size_t i = 0;
    for (const auto& [user, _] : beliefs) {
      const double b = xs[i++];
      BeliefClass c = BeliefClass::Normal;
      if (!st.degenerate) {
        if (b < st.low) c = BeliefClass::ExtremeLow;
        else if (b > st.high) c = BeliefClass::ExtremeHigh;
      }
      out.classes[user][cat] = c;
    }
    out.stats[cat] = st;
  }
  for (const auto& [user, cls] : out.classes)
    if (is_fb_affected(cls)) out.fb_users.insert(user);
  return out;
}

// Cold networks are left out.
inline Classification classify_users(const std::map<std::string, BeliefNetwork>& networks,
                                     const std::vector<std::string>& categories) {
  std::map<std::string, std::map<std::string, double>> b;
  for (const auto& [u, n] : networks)
    if (!n.cold()) b[u] = n.beliefs();
  return classify_users(b, categories);
}

struct SystemThresholds {
  double coverage_max = 0.15;
  double trend_min = 0.5;
};

struct DetectionReport {
  std::vector<double> coverage;
  std::vector<double> coverage_formula;
  std::vector<double> duplicate;
  std::vector<WindowShare> shares;
  std::string preferred_category;
  std::vector<double> preferred_share;
  Classification classification;
  bool fb_system = false;
};

// Category with the largest share summed over windows (ties: smallest name).
inline std::string preferred_category(const std::vector<WindowShare>& shares) {
  std::map<std::string, double> tot;
  for (const auto& w : shares)
    for (const auto& [c, v] : w.share) tot[c] += v;
  std::string best;
  double bv = -1;
  for (const auto& [c, v] : tot)
    if (v > bv) best = c, bv = v;
  return best;
}

// 1 for a non-decreasing series, else Kendall tau against time.
inline double concentration_trend(const std::vector<double>& series) {
  if (std::is_sorted(series.begin(), series.end())) return 1.0;
  return kendall_tau(series);
}

inline bool detect_fb_system(const DetectionReport& r, const SystemThresholds& t = {}) {
  if (r.coverage.size() < 5) throw PreconditionError("detect_fb_system: need at least 5 feeds");
  if (r.shares.size() < 2) throw PreconditionError("detect_fb_system: need at least 2 windows");
  std::vector<double> pref;
  const std::string c = preferred_category(r.shares);
  for (const auto& w : r.shares) {
    auto it = w.share.find(c);
    pref.push_back(it == w.share.end() ? 0.0 : it->second);
  }
  return mean(r.coverage) < t.coverage_max && concentration_trend(pref) >= t.trend_min;
}

// Forward reconnaissance over one feed log. Leaves classification empty.
inline DetectionReport forward_report(const std::vector<Feed>& feeds, std::size_t n_categories,
                                      std::size_t window) {
  DetectionReport r;
  for (const auto& f : feeds) {
    r.coverage.push_back(diversity_coverage(f, n_categories));
    r.coverage_formula.push_back(diversity_coverage_formula(subcategory_frequencies(f)));
    r.duplicate.push_back(f.items.size() >= 2 ? diversity_duplicate(f) : 0.0);
  }
  if (!feeds.empty()) {
    r.shares = time_evolution_report(feeds, std::min(window, feeds.size()));
    r.preferred_category = preferred_category(r.shares);
    for (const auto& w : r.shares) {
      auto it = w.share.find(r.preferred_category);
      r.preferred_share.push_back(it == w.share.end() ? 0.0 : it->second);
    }
  }
  return r;
}

inline nlohmann::json to_json(const Classification& c) {
  nlohmann::json stats = nlohmann::json::object();
  for (const auto& [cat, s] : c.stats)
    stats[cat] = {{"mu", s.mu},       {"sigma", s.sigma}, {"low", s.low},
                  {"high", s.high},   {"K", s.K},         {"p", s.p},
                  {"skewness", s.skewness}, {"degenerate", s.degenerate}};
  nlohmann::json classes = nlohmann::json::object();
  for (const auto& [u, m] : c.classes) {
    nlohmann::json row = nlohmann::json::object();
    for (const auto& [cat, cl] : m)
      if (cl != BeliefClass::Normal) row[cat] = to_string(cl);
    classes[u] = row;
  }
  return {{"normality", stats}, {"user_classes", classes}, {"fb_users", c.fb_users}};
}

inline nlohmann::json to_json(const DetectionReport& r) {
  nlohmann::json shares = nlohmann::json::array();
  for (const auto& w : r.shares) shares.push_back({{"window", w.window}, {"share", w.share}});
  nlohmann::json j = to_json(r.classification);
  j["coverage"] = r.coverage;
  j["coverage_formula"] = r.coverage_formula;
  j["duplicate"] = r.duplicate;
  j["category_share_series"] = shares;
  j["preferred_category"] = r.preferred_category;
  j["fb_system"] = r.fb_system;
  return j;
}

// Histogram of belief values per category: category,bin_lo,bin_hi,users.
inline void write_belief_histograms(std::ostream& out,
                                    const std::map<std::string, BeliefNetwork>& networks,
                                    const std::vector<std::string>& categories,
                                    double bin_width = 0.1) {
  out << "category,bin_lo,bin_hi,users\n";
  for (const auto& cat : categories) {
    std::map<long, std::size_t> bins;
    long top = 0;
    for (const auto& [_, n] : networks) {
      if (n.cold()) continue;
      const long b = static_cast<long>(std::floor(n.belief_degree(cat) / bin_width + 1e-9));
      ++bins[b];
      top = std::max(top, b);
    }
    for (long b = 0; b <= top; ++b)
      out << csv_escape(cat) << ',' << fmt_fixed(b * bin_width, 2) << ','
          << fmt_fixed((b + 1) * bin_width, 2) << ',' << bins[b] << '\n';
  }
}

}  // namespace bheisr
