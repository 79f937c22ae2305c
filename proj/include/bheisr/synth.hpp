#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bheisr/corpus.hpp"
#include "bheisr/rng.hpp"

namespace bheisr {

// Category indices designating one biased user's extremes.
struct BiasAssignment {
  std::size_t interest = 0;
  std::size_t disinterest = 0;
  bool operator==(const BiasAssignment&) const = default;
};

// Either an automatic count of biased users or an explicit per-user list
// (nullopt = balanced).
struct BiasProfile {
  std::size_t n_biased = 0;
  std::vector<std::optional<BiasAssignment>> manual;

  static BiasProfile balanced() { return {}; }
  static BiasProfile automatic(std::size_t n) { return {n, {}}; }
  static BiasProfile per_user(std::vector<std::optional<BiasAssignment>> v) {
    BiasProfile p;
    p.manual = std::move(v);
    p.n_biased = static_cast<std::size_t>(
        std::count_if(p.manual.begin(), p.manual.end(), [](auto& a) { return a.has_value(); }));
    return p;
  }
};

struct SynthSpec {
  std::size_t n_users = 20;
  std::size_t n_categories = 17;
  std::size_t subcats_per_category = 4;
  std::size_t n_items = 500;
  BiasProfile bias;
  std::uint64_t seed = 7;
  std::size_t history_scale = 1;  // multiplies every user's click counts
};

// Fixture used by the experiments and the acceptance suite: a MIND-like
// 17-category world with ten biased users among forty. 1000 items per
// category keeps CB from exhausting a category over 100 feeds.
inline SynthSpec bundled_spec() {
  return {40, 17, 4, 17000, BiasProfile::automatic(10), 7};
}

namespace synth_detail {

inline const std::vector<std::string>& mind_categories() {
  static const std::vector<std::string> names = {
      "autos",  "entertainment", "finance", "foodanddrink", "health", "kids",
      "lifestyle", "middleeast", "movies",  "music",        "news",   "northamerica",
      "sports", "travel",        "tv",      "video",        "weather"};
  return names;
}

inline std::string pad(std::size_t v, std::size_t width) {
  std::string s = std::to_string(v);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

inline std::size_t digits(std::size_t n) { return std::to_string(n == 0 ? 0 : n - 1).size(); }

constexpr std::size_t kCategoryWords = 12;
constexpr std::size_t kSubcatWords = 4;
constexpr std::size_t kBridgeWords = 6;
constexpr std::size_t kInterestClicks = 27;
constexpr std::size_t kResidualClicks = 3;
constexpr std::size_t kBalancedClicksPerCategory = 2;
constexpr std::size_t kSkips = 3;

}  // namespace synth_detail

inline std::vector<std::string> synth_category_names(std::size_t n) {
  std::vector<std::string> out;
  const auto& base = synth_detail::mind_categories();
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(i < base.size() ? base[i] : "category" + std::to_string(i));
  return out;
}

inline std::vector<std::string> synth_user_ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i)
    out.push_back("U" + synth_detail::pad(i + 1, synth_detail::digits(n + 1)));
  return out;
}

// Disinterest columns sit evenly around the category ring; interests sit one
// or two steps away from their disinterest so short nudge paths exist.
inline std::vector<std::optional<BiasAssignment>> resolve_bias(const SynthSpec& spec) {
  const std::size_t n = spec.n_users, cats = spec.n_categories;
  if (!spec.bias.manual.empty()) {
    require(spec.bias.manual.size() == n, "manual bias profile must list every user");
    for (const auto& a : spec.bias.manual) {
      if (!a) continue;
      require(a->interest < cats && a->disinterest < cats && a->interest != a->disinterest,
              "bias assignment out of range");
    }
    return spec.bias.manual;
  }
  std::vector<std::optional<BiasAssignment>> out(n);
  const std::size_t biased = spec.bias.n_biased;
  if (biased == 0) return out;
  require(biased <= n, "more biased users than users");

  const std::size_t k = std::min<std::size_t>({4, biased, cats - 2});
  std::vector<std::size_t> dis;
  for (std::size_t j = 0; j < k; ++j) dis.push_back((j * cats + k / 2) / k % cats);
  auto is_dis = [&](std::size_t c) { return std::find(dis.begin(), dis.end(), c) != dis.end(); };

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  RngStream rng(combine_seed(spec.seed, 0xb1a5));
  shuffle(order, rng);
  std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<long>(biased));
  std::sort(chosen.begin(), chosen.end());

  const long offsets[] = {1, -1, 1, -1, 2, -2};
  for (std::size_t b = 0; b < chosen.size(); ++b) {
    const std::size_t d = dis[b % k];
    std::size_t interest = cats;
    for (std::size_t t = 0; t < 6 && interest == cats; ++t) {
      const long o = offsets[(b / k + t) % 6];
      const auto c = static_cast<std::size_t>(
          ((static_cast<long>(d) + o) % static_cast<long>(cats) + static_cast<long>(cats)) %
          static_cast<long>(cats));
      if (!is_dis(c)) interest = c;
    }
    for (std::size_t c = 0; interest == cats && c < cats; ++c)
      if (!is_dis(c)) interest = c;
    out[chosen[b]] = BiasAssignment{interest, d};
  }
  return out;
}

// Seeded synthetic corpus. Item text is built from per-category word pools
// plus bridge words shared by ring-adjacent categories, so category
// correlations form a ring. Biased users put 27 of 30 clicks into their
// interest category (spread over its subcategories), none into their
// disinterest category, and the rest into the other users' disinterest
// categories. Balanced users click every category equally. history_scale
// multiplies all of these counts.
inline Corpus synth_corpus(const SynthSpec& spec) {
  using namespace synth_detail;
  require(spec.n_users >= 1 && spec.n_categories >= 1 && spec.subcats_per_category >= 1 &&
              spec.n_items >= 1,
          "synth counts must be >= 1");
  const bool any_bias = spec.bias.n_biased > 0;
  if (any_bias && spec.n_categories < 3)
    throw PreconditionError("biased synthetic users need at least 3 categories");
  require(spec.history_scale >= 1, "history_scale must be >= 1");
  require(spec.n_items >= spec.n_categories * spec.subcats_per_category,
          "n_items must cover every subcategory");

  const std::size_t C = spec.n_categories, S = spec.subcats_per_category, H = spec.history_scale;
  const auto cats = synth_category_names(C);
  auto sub_name = [&](std::size_t c, std::size_t s) { return cats[c] + "/s" + std::to_string(s); };

  Taxonomy taxonomy;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t s = 0; s < S; ++s) taxonomy[cats[c]].insert(sub_name(c, s));

  const auto bias = resolve_bias(spec);
  std::vector<std::size_t> dis_columns;
  for (const auto& a : bias)
    if (a && std::find(dis_columns.begin(), dis_columns.end(), a->disinterest) == dis_columns.end())
      dis_columns.push_back(a->disinterest);
  std::sort(dis_columns.begin(), dis_columns.end());
  auto is_dis = [&](std::size_t c) {
    return std::find(dis_columns.begin(), dis_columns.end(), c) != dis_columns.end();
  };

  // items
  std::vector<Item> items;
  std::vector<std::vector<std::vector<std::size_t>>> pool(C, std::vector<std::vector<std::size_t>>(S));
  const std::size_t id_width = digits(spec.n_items + 1);
  for (std::size_t i = 0; i < spec.n_items; ++i) {
    const std::size_t c = i % C, s = (i / C) % S;
    RngStream rng(combine_seed(spec.seed, 0x17e0000 + i));
    auto cat_word = [&] { return cats[c] + std::to_string(rng.next_below(kCategoryWords)); };
    auto sub_word = [&] {
      return cats[c] + "s" + std::to_string(s) + "w" + std::to_string(rng.next_below(kSubcatWords));
    };
    auto bridge_word = [&] {
      const std::size_t link = rng.next_below(2) ? c : (c + C - 1) % C;
      return "link" + std::to_string(link) + "w" + std::to_string(rng.next_below(kBridgeWords));
    };
    std::vector<std::string> title = {cat_word(), sub_word(), cat_word(), bridge_word()};
    std::vector<std::string> abstract;
    for (int w = 0; w < 5; ++w) abstract.push_back(cat_word());
    abstract.push_back(sub_word());
    abstract.push_back(sub_word());
    abstract.push_back(bridge_word());
    Item it;
    it.id = "N" + pad(i + 1, id_width);
    it.category = cats[c];
    it.subcategory = sub_name(c, s);
    it.title = std::move(title);
    it.abstract = std::move(abstract);
    it.category_weights = {{cats[c], 1.0}};
    pool[c][s].push_back(items.size());
    items.push_back(std::move(it));
  }

  const auto user_ids = synth_user_ids(spec.n_users);
  std::vector<Interaction> interactions;
  std::int64_t clock = 0;
  for (std::size_t u = 0; u < spec.n_users; ++u) {
    RngStream rng(user_seed(spec.seed, user_ids[u]));
    std::vector<std::pair<std::size_t, std::size_t>> clicks;  // (category, subcategory)
    std::vector<std::size_t> skip_categories;
    if (const auto& a = bias[u]) {
      const std::size_t start = rng.next_below(S);
      std::vector<std::size_t> residual_cols;
      for (std::size_t c : dis_columns)
        if (c != a->disinterest && c != a->interest) residual_cols.push_back(c);
      const std::size_t residual = residual_cols.empty() ? 0 : kResidualClicks * H;
      for (std::size_t k = 0; k < (kInterestClicks + kResidualClicks) * H - residual; ++k)
        clicks.emplace_back(a->interest, (start + k) % S);
      std::vector<std::size_t> used(C, 0);
      for (std::size_t k = 0; k < residual; ++k) {
        const std::size_t c = residual_cols[k % residual_cols.size()];
        const std::size_t s = (rng.next_below(S) + used[c]++) % S;
        clicks.emplace_back(c, s);
      }
      skip_categories.assign(kSkips, a->disinterest);
    } else {
      for (std::size_t c = 0; c < C; ++c) {
        const std::size_t s = rng.next_below(S);
        for (std::size_t k = 0; k < kBalancedClicksPerCategory * H; ++k) clicks.emplace_back(c, s);
      }
      for (std::size_t k = 0; k < kSkips; ++k) skip_categories.push_back(rng.next_below(C));
    }
    shuffle(clicks, rng);

    std::vector<std::vector<std::size_t>> taken(C * S);
    auto pick = [&](std::size_t c, std::size_t s) {
      const auto& p = pool[c][s];
      auto& t = taken[c * S + s];
      if (t.size() >= p.size()) t.clear();  // pool exhausted: allow repeats
      std::size_t idx;
      do idx = p[rng.next_below(p.size())];
      while (std::find(t.begin(), t.end(), idx) != t.end());
      t.push_back(idx);
      return idx;
    };
    for (auto [c, s] : clicks)
      interactions.push_back({user_ids[u], items[pick(c, s)].id, clock++, 1.0});
    for (std::size_t c : skip_categories) {
      const std::size_t s = rng.next_below(S);
      interactions.push_back({user_ids[u], items[pool[c][s][rng.next_below(pool[c][s].size())]].id,
                              clock++, 0.0});
    }
  }
  std::set<std::string> users(user_ids.begin(), user_ids.end());
  return Corpus(std::move(items), std::move(interactions), std::move(taxonomy), std::move(users),
                SignalKind::click);
}

}  // namespace bheisr
