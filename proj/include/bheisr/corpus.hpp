#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bheisr/error.hpp"
#include "bheisr/text.hpp"

namespace bheisr {

enum class Origin { dataset, generated };

inline const char* to_string(Origin o) { return o == Origin::dataset ? "dataset" : "generated"; }

inline Origin origin_from_string(const std::string& s) {
  if (s == "dataset") return Origin::dataset;
  if (s == "generated") return Origin::generated;
  throw Error("unknown item origin '" + s + "'");
}

// A recommendable unit: news article, movie, or generated text.
struct Item {
  std::string id;
  std::string category;
  std::string subcategory;
  std::vector<std::string> title;     // whitespace-separated words
  std::vector<std::string> abstract;  // may be empty
  std::map<std::string, double> category_weights;
  Origin origin = Origin::dataset;
  std::string prompt_key;  // generated items only

  std::string text() const {
    std::string t = join(title, " ");
    if (!abstract.empty()) t += " " + join(abstract, " ");
    return t;
  }

  bool operator==(const Item&) const = default;
};

inline Item make_dataset_item(std::string id, std::string category, std::string subcategory,
                              std::string_view title, std::string_view abstract = {}) {
  Item it;
  it.id = std::move(id);
  it.category = std::move(category);
  it.subcategory = std::move(subcategory);
  it.title = words(title);
  it.abstract = words(abstract);
  it.category_weights = {{it.category, 1.0}};
  return it;
}

struct Interaction {
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;  // ordinal
  double signal = 0.0;

  bool operator==(const Interaction&) const = default;
};

// How Interaction::signal encodes interest.
enum class SignalKind { click, rating };

inline bool is_interested(SignalKind kind, double signal) {
  return kind == SignalKind::click ? signal > 0.5 : signal > 2.5;
}

using Taxonomy = std::map<std::string, std::set<std::string>>;

// Immutable after construction; share freely between readers.
class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Item> items, std::vector<Interaction> interactions, Taxonomy taxonomy,
         std::set<std::string> users, SignalKind kind)
      : items_(std::move(items)),
        interactions_(std::move(interactions)),
        taxonomy_(std::move(taxonomy)),
        users_(std::move(users)),
        kind_(kind) {
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (!index_.emplace(items_[i].id, i).second)
        throw Error("duplicate item id '" + items_[i].id + "'");
    }
    for (std::size_t i = 0; i < interactions_.size(); ++i)
      by_user_[interactions_[i].user_id].push_back(i);
    validate();
  }

  const std::vector<Item>& items() const noexcept { return items_; }
  const std::vector<Interaction>& interactions() const noexcept { return interactions_; }
  const Taxonomy& taxonomy() const noexcept { return taxonomy_; }
  const std::set<std::string>& users() const noexcept { return users_; }
  SignalKind signal_kind() const noexcept { return kind_; }

  std::vector<std::string> categories() const {
    std::vector<std::string> out;
    for (const auto& [c, _] : taxonomy_) out.push_back(c);
    return out;
  }

  bool has_item(const std::string& id) const { return index_.count(id) > 0; }

  const Item& item(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownKeyError("unknown item '" + id + "'");
    return items_[it->second];
  }

  std::size_t item_position(const std::string& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw UnknownKeyError("unknown item '" + id + "'");
    return it->second;
  }

  bool interested(const Interaction& x) const { return is_interested(kind_, x.signal); }

  // Interactions of one user in timestamp order.
  std::vector<const Interaction*> history(const std::string& user) const {
    std::vector<const Interaction*> out;
    if (auto it = by_user_.find(user); it != by_user_.end())
      for (std::size_t i : it->second) out.push_back(&interactions_[i]);
    std::stable_sort(out.begin(), out.end(),
                     [](auto* a, auto* b) { return a->timestamp < b->timestamp; });
    return out;
  }

  bool operator==(const Corpus& o) const {
    return items_ == o.items_ && interactions_ == o.interactions_ && taxonomy_ == o.taxonomy_ &&
           users_ == o.users_ && kind_ == o.kind_;
  }

 private:
  void validate() const {
    for (const auto& it : items_) {
      auto t = taxonomy_.find(it.category);
      if (t == taxonomy_.end() || !t->second.count(it.subcategory))
        throw Error("item '" + it.id + "' has (category, subcategory) outside the taxonomy");
      double sum = 0.0;
      for (const auto& [c, w] : it.category_weights) {
        if (!taxonomy_.count(c)) throw Error("item '" + it.id + "' weights unknown category " + c);
        if (w < 0.0 || w > 1.0) throw Error("item '" + it.id + "' has weight outside [0,1]");
        sum += w;
      }
      if (std::abs(sum - 1.0) > 1e-9) throw Error("item '" + it.id + "' weights do not sum to 1");
      if (it.origin == Origin::dataset &&
          (it.category_weights.size() != 1 || !it.category_weights.count(it.category)))
        throw Error("dataset item '" + it.id + "' must weight only its own category");
    }
    for (const auto& x : interactions_) {
      if (!index_.count(x.item_id)) throw Error("interaction references unknown item " + x.item_id);
      if (!users_.count(x.user_id)) throw Error("interaction references unknown user " + x.user_id);
    }
  }

  std::vector<Item> items_;
  std::vector<Interaction> interactions_;
  Taxonomy taxonomy_;
  std::set<std::string> users_;
  SignalKind kind_ = SignalKind::click;
  std::unordered_map<std::string, std::size_t> index_;
  std::unordered_map<std::string, std::vector<std::size_t>> by_user_;
};

// A record dropped during loading. Not fatal.
struct Reject {
  std::string file;
  std::size_t line = 0;
  std::string reason;
};

struct LoadResult {
  Corpus corpus;
  std::vector<Reject> rejects;
};

namespace detail {

constexpr std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) noexcept {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; });
}

inline std::optional<std::int64_t> to_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  bool neg = s.front() == '-';
  if (neg) s.remove_prefix(1);
  if (!all_digits(s) || s.size() > 18) return std::nullopt;
  std::int64_t v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return neg ? -v : v;
}

inline std::optional<double> to_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// Seconds since epoch for the accepted shapes: integer, MIND's
// "M/D/YYYY h:mm:ss AM", or ISO "YYYY-MM-DD[ T]HH:MM[:SS]".
inline std::optional<std::int64_t> parse_timestamp(std::string_view raw) {
  const std::string s = trim(raw);
  if (auto v = to_int(s)) return v;
  auto hms = [](std::string_view t, bool twelve_hour, std::string_view ampm)
      -> std::optional<std::int64_t> {
    auto parts = split(t, ':');
    if (parts.size() < 2 || parts.size() > 3) return std::nullopt;
    std::int64_t f[3] = {0, 0, 0};
    for (std::size_t i = 0; i < parts.size(); ++i) {
      auto v = to_int(parts[i]);
      if (!v || *v < 0) return std::nullopt;
      f[i] = *v;
    }
    if (twelve_hour) {
      if (f[0] < 1 || f[0] > 12) return std::nullopt;
      if (ampm == "AM") f[0] = f[0] == 12 ? 0 : f[0];
      else if (ampm == "PM") f[0] = f[0] == 12 ? 12 : f[0] + 12;
      else return std::nullopt;
    }
    if (f[0] > 23 || f[1] > 59 || f[2] > 60) return std::nullopt;
    return f[0] * 3600 + f[1] * 60 + f[2];
  };
  if (s.find('/') != std::string::npos) {
    auto tok = words(s);
    if (tok.size() != 3) return std::nullopt;
    auto date = split(tok[0], '/');
    if (date.size() != 3) return std::nullopt;
    auto mo = to_int(date[0]), d = to_int(date[1]), y = to_int(date[2]);
    if (!mo || !d || !y || *mo < 1 || *mo > 12 || *d < 1 || *d > 31) return std::nullopt;
    auto t = hms(tok[1], true, tok[2]);
    if (!t) return std::nullopt;
    return days_from_civil(*y, static_cast<unsigned>(*mo), static_cast<unsigned>(*d)) * 86400 + *t;
  }
  if (s.size() >= 10 && s[4] == '-' && s[7] == '-') {
    auto y = to_int(s.substr(0, 4)), mo = to_int(s.substr(5, 2)), d = to_int(s.substr(8, 2));
    if (!y || !mo || !d || *mo < 1 || *mo > 12 || *d < 1 || *d > 31) return std::nullopt;
    std::int64_t secs = 0;
    if (s.size() > 10) {
      if (s[10] != ' ' && s[10] != 'T') return std::nullopt;
      auto t = hms(s.substr(11), false, {});
      if (!t) return std::nullopt;
      secs = *t;
    }
    return days_from_civil(*y, static_cast<unsigned>(*mo), static_cast<unsigned>(*d)) * 86400 + secs;
  }
  return std::nullopt;
}

// Rank of each raw key in a stable sort: equal keys keep file order.
inline std::vector<std::int64_t> ordinals(const std::vector<std::int64_t>& keys) {
  std::vector<std::size_t> order(keys.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  std::vector<std::int64_t> out(keys.size());
  for (std::size_t r = 0; r < order.size(); ++r) out[order[r]] = static_cast<std::int64_t>(r);
  return out;
}

inline std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

}  // namespace detail

// MIND-style behaviors: user_id, timestamp, category, subcategory, title,
// abstract, click. Exactly seven tab-separated columns per row (abstract may
// be empty). Items are identified by their (category, subcategory, title,
// abstract) content and numbered N1, N2, ... in order of first appearance.
inline LoadResult load_behaviors(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  const std::string file = path.filename().string();

  struct Row {
    std::string user, category, subcategory, title, abstract;
    std::int64_t ts;
    double click;
  };
  std::vector<Row> rows;
  std::vector<Reject> rejects;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    if (line.empty()) continue;
    auto cols = split(line, '\t');
    if (lineno == 1 && !cols.empty() && cols[0] == "user_id") continue;  // optional header
    if (cols.size() != 7)
      throw ParseError(file, lineno, "expected 7 tab-separated columns, found " +
                                         std::to_string(cols.size()));
    if (cols[0].empty()) throw ParseError(file, lineno, "empty user_id");
    auto ts = detail::parse_timestamp(cols[1]);
    if (!ts) throw ParseError(file, lineno, "unparseable timestamp '" + cols[1] + "'");
    const std::string click = trim(cols[6]);
    if (click != "0" && click != "1") throw ParseError(file, lineno, "click must be 0 or 1");
    if (trim(cols[2]).empty()) {
      rejects.push_back({file, lineno, "empty category"});
      continue;
    }
    if (trim(cols[3]).empty()) {
      rejects.push_back({file, lineno, "empty subcategory"});
      continue;
    }
    if (trim(cols[4]).empty()) {
      rejects.push_back({file, lineno, "empty title"});
      continue;
    }
    rows.push_back({cols[0], trim(cols[2]), trim(cols[3]), cols[4], cols[5], *ts,
                    click == "1" ? 1.0 : 0.0});
  }

  std::vector<std::int64_t> keys;
  keys.reserve(rows.size());
  for (const auto& r : rows) keys.push_back(r.ts);
  const auto ord = detail::ordinals(keys);

  std::vector<Item> items;
  std::map<std::tuple<std::string, std::string, std::string, std::string>, std::string> ids;
  std::vector<Interaction> interactions;
  Taxonomy taxonomy;
  std::set<std::string> users;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    auto key = std::make_tuple(r.category, r.subcategory, r.title, r.abstract);
    auto it = ids.find(key);
    if (it == ids.end()) {
      std::string id = "N" + std::to_string(items.size() + 1);
      items.push_back(make_dataset_item(id, r.category, r.subcategory, r.title, r.abstract));
      it = ids.emplace(key, id).first;
    }
    taxonomy[r.category].insert(r.subcategory);
    users.insert(r.user);
    interactions.push_back({r.user, it->second, ord[i], r.click});
  }
  return {Corpus(std::move(items), std::move(interactions), std::move(taxonomy), std::move(users),
                 SignalKind::click),
          std::move(rejects)};
}

// IMDB-style: movies.csv (id, genres '|'-separated, title, overview) and
// ratings.csv (user_id, movie_id, rating, timestamp), each with a header row.
// First genre is the category; every further genre becomes the subcategory
// label "category/genre" (the item uses the first of them), and single-genre
// movies use "category/general".
inline LoadResult load_ratings(const std::filesystem::path& movies_path,
                               const std::filesystem::path& ratings_path) {
  std::vector<Reject> rejects;
  std::vector<Item> items;
  std::set<std::string> movie_ids;
  Taxonomy taxonomy;
  {
    auto in = detail::open_input(movies_path);
    const std::string file = movies_path.filename().string();
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      strip_cr(line);
      if (line.empty()) continue;
      bool ok = true;
      auto cols = parse_csv_line(line, &ok);
      if (lineno == 1) {
        if (cols.empty() || trim(cols[0]) != "id")
          throw ParseError(file, lineno, "expected header id,genres,title,overview");
        continue;
      }
      if (!ok || cols.size() != 4) throw ParseError(file, lineno, "expected 4 CSV columns");
      const std::string id = trim(cols[0]);
      if (id.empty()) throw ParseError(file, lineno, "empty movie id");
      std::vector<std::string> genres;
      for (auto& g : split(cols[1], '|'))
        if (auto t = trim(g); !t.empty()) genres.push_back(t);
      if (genres.empty()) {
        rejects.push_back({file, lineno, "movie " + id + " has no genres"});
        continue;
      }
      if (trim(cols[2]).empty()) {
        rejects.push_back({file, lineno, "movie " + id + " has an empty title"});
        continue;
      }
      if (!movie_ids.insert(id).second) {
        rejects.push_back({file, lineno, "duplicate movie id " + id});
        continue;
      }
      const std::string& category = genres.front();
      auto& subs = taxonomy[category];
      std::string sub;
      if (genres.size() == 1) {
        sub = category + "/general";
        subs.insert(sub);
      } else {
        for (std::size_t g = 1; g < genres.size(); ++g) subs.insert(category + "/" + genres[g]);
        sub = category + "/" + genres[1];
      }
      items.push_back(make_dataset_item(id, category, sub, cols[2], cols[3]));
    }
  }

  struct Rating {
    std::string user, movie;
    double rating;
    std::int64_t ts;
    std::size_t row;
  };
  std::map<std::pair<std::string, std::string>, Rating> latest;
  {
    auto in = detail::open_input(ratings_path);
    const std::string file = ratings_path.filename().string();
    std::string line;
    std::size_t lineno = 0, row = 0;
    while (std::getline(in, line)) {
      ++lineno;
      strip_cr(line);
      if (line.empty()) continue;
      bool ok = true;
      auto cols = parse_csv_line(line, &ok);
      if (lineno == 1) {
        if (cols.empty() || trim(cols[0]) != "user_id")
          throw ParseError(file, lineno, "expected header user_id,movie_id,rating,timestamp");
        continue;
      }
      if (!ok || cols.size() != 4) throw ParseError(file, lineno, "expected 4 CSV columns");
      const std::string user = trim(cols[0]), movie = trim(cols[1]);
      if (user.empty()) throw ParseError(file, lineno, "empty user_id");
      auto rating = detail::to_double(trim(cols[2]));
      if (!rating) throw ParseError(file, lineno, "rating is not a number");
      auto ts = detail::parse_timestamp(cols[3]);
      if (!ts) throw ParseError(file, lineno, "unparseable timestamp '" + cols[3] + "'");
      if (*rating < 0.0 || *rating > 5.0) {
        rejects.push_back({file, lineno, "rating " + trim(cols[2]) + " outside [0,5]"});
        continue;
      }
      if (!movie_ids.count(movie)) {
        rejects.push_back({file, lineno, "rating references unknown movie " + movie});
        continue;
      }
      Rating r{user, movie, *rating, *ts, row++};
      auto key = std::make_pair(user, movie);
      auto it = latest.find(key);
      if (it == latest.end()) latest.emplace(key, r);
      else if (r.ts >= it->second.ts) it->second = r;  // keep last by timestamp
    }
  }

  std::vector<Rating> kept;
  for (auto& [_, r] : latest) kept.push_back(r);
  std::sort(kept.begin(), kept.end(), [](const Rating& a, const Rating& b) { return a.row < b.row; });
  std::vector<std::int64_t> keys;
  for (const auto& r : kept) keys.push_back(r.ts);
  const auto ord = detail::ordinals(keys);
  std::vector<Interaction> interactions;
  std::set<std::string> users;
  for (std::size_t i = 0; i < kept.size(); ++i) {
    users.insert(kept[i].user);
    interactions.push_back({kept[i].user, kept[i].movie, ord[i], kept[i].rating});
  }
  return {Corpus(std::move(items), std::move(interactions), std::move(taxonomy), std::move(users),
                 SignalKind::rating),
          std::move(rejects)};
}

inline LoadResult load_ratings(const std::filesystem::path& dir) {
  return load_ratings(dir / "movies.csv", dir / "ratings.csv");
}

// Writes MIND-style behaviors (inverse of load_behaviors for click corpora).
// Timestamps are written as the integer ordinals.
inline void write_behaviors(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  for (const auto& x : corpus.interactions()) {
    const Item& it = corpus.item(x.item_id);
    out << x.user_id << '\t' << x.timestamp << '\t' << it.category << '\t' << it.subcategory
        << '\t' << join(it.title, " ") << '\t' << join(it.abstract, " ") << '\t'
        << (corpus.interested(x) ? 1 : 0) << '\n';
  }
}

// ---- canonical JSON -------------------------------------------------------

inline nlohmann::json item_to_json(const Item& it) {
  nlohmann::json j = {{"id", it.id},
                      {"category", it.category},
                      {"subcategory", it.subcategory},
                      {"title", it.title},
                      {"abstract", it.abstract},
                      {"category_weights", it.category_weights},
                      {"origin", to_string(it.origin)}};
  if (it.origin == Origin::generated) j["prompt_key"] = it.prompt_key;
  return j;
}

inline Item item_from_json(const nlohmann::json& j) {
  Item it;
  it.id = j.at("id").get<std::string>();
  it.category = j.at("category").get<std::string>();
  it.subcategory = j.at("subcategory").get<std::string>();
  it.title = j.at("title").get<std::vector<std::string>>();
  it.abstract = j.at("abstract").get<std::vector<std::string>>();
  it.category_weights = j.at("category_weights").get<std::map<std::string, double>>();
  it.origin = origin_from_string(j.at("origin").get<std::string>());
  if (j.contains("prompt_key")) it.prompt_key = j.at("prompt_key").get<std::string>();
  return it;
}

inline nlohmann::json corpus_to_json(const Corpus& c) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& it : c.items()) items.push_back(item_to_json(it));
  nlohmann::json xs = nlohmann::json::array();
  for (const auto& x : c.interactions())
    xs.push_back({{"user_id", x.user_id},
                  {"item_id", x.item_id},
                  {"timestamp", x.timestamp},
                  {"signal", x.signal}});
  nlohmann::json tax = nlohmann::json::array();
  for (const auto& [cat, subs] : c.taxonomy())
    tax.push_back({{"category", cat}, {"subcategories", subs}});
  return {{"signal_kind", c.signal_kind() == SignalKind::click ? "click" : "rating"},
          {"items", items},
          {"interactions", xs},
          {"taxonomy", tax},
          {"users", c.users()}};
}

inline Corpus corpus_from_json(const nlohmann::json& j) {
  std::vector<Item> items;
  for (const auto& e : j.at("items")) items.push_back(item_from_json(e));
  std::vector<Interaction> xs;
  for (const auto& e : j.at("interactions"))
    xs.push_back({e.at("user_id").get<std::string>(), e.at("item_id").get<std::string>(),
                  e.at("timestamp").get<std::int64_t>(), e.at("signal").get<double>()});
  Taxonomy tax;
  for (const auto& e : j.at("taxonomy"))
    tax[e.at("category").get<std::string>()] = e.at("subcategories").get<std::set<std::string>>();
  std::set<std::string> users = j.at("users").get<std::set<std::string>>();
  const auto kind = j.value("signal_kind", std::string("click")) == "rating" ? SignalKind::rating
                                                                              : SignalKind::click;
  return Corpus(std::move(items), std::move(xs), std::move(tax), std::move(users), kind);
}

inline void save_corpus(const Corpus& c, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << corpus_to_json(c).dump(1) << '\n';
}

inline Corpus load_corpus_json(const std::filesystem::path& path) {
  auto in = detail::open_input(path);
  return corpus_from_json(nlohmann::json::parse(in));
}

// Dispatches on the path shape: directory with movies.csv -> IMDB style,
// *.json -> canonical, anything else -> MIND behaviors TSV.
inline LoadResult load_dataset(const std::filesystem::path& path) {
  if (std::filesystem::is_directory(path)) return load_ratings(path);
  if (path.extension() == ".json") return {load_corpus_json(path), {}};
  return load_behaviors(path);
}

}  // namespace bheisr
