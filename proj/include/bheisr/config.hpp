#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bheisr/corpus.hpp"
#include "bheisr/error.hpp"
#include "bheisr/fbdmr.hpp"
#include "bheisr/simulate.hpp"
#include "bheisr/synth.hpp"
#include "bheisr/text.hpp"

namespace bheisr {

// Settings shared by every CLI command.
struct RunOptions {
  std::string dataset;
  std::string synth;  // "bundled" or "users=..,categories=..,..."
  SimConfig sim;
  std::string out = "out";
  std::string generator_kind = "template";
  std::string generator_url;
  int generator_timeout_ms = 2000;
  int generator_retries = 2;
  SystemThresholds thresholds;
  std::size_t window = 2;
  std::vector<double> w_values = {0.2, 0.4, 0.6, 0.8};
};

using FlatConfig = std::map<std::string, std::string>;

// key = value lines; '#' starts a comment outside quotes; values may be
// double-quoted. [section] headers prefix the keys that follow.
inline FlatConfig parse_flat_config(std::istream& in, const std::string& file = "config") {
  FlatConfig out;
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    strip_cr(line);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      else if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ParseError(file, lineno, "unterminated section header");
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(file, lineno, "expected key = value");
    std::string key = trim(t.substr(0, eq)), value = trim(t.substr(eq + 1));
    if (key.empty()) throw ParseError(file, lineno, "empty key");
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
      value = value.substr(1, value.size() - 2);
    out[section.empty() ? key : section + "." + key] = value;
  }
  return out;
}

inline FlatConfig load_flat_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  return parse_flat_config(in, path.filename().string());
}

inline std::optional<std::size_t> parse_theta(const std::string& s) {
  std::string v = s;
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "inf" || v == "infinity" || v == "none") return std::nullopt;
  auto n = detail::to_int(v);
  if (!n || *n < 1) throw Error("theta must be a positive integer or 'inf'");
  return static_cast<std::size_t>(*n);
}

inline double parse_real(const std::string& key, const std::string& v) {
  auto d = detail::to_double(v);
  if (!d) throw Error("config key '" + key + "' expects a number, got '" + v + "'");
  return *d;
}

inline std::size_t parse_count(const std::string& key, const std::string& v) {
  auto n = detail::to_int(v);
  if (!n || *n < 0) throw Error("config key '" + key + "' expects a non-negative integer");
  return static_cast<std::size_t>(*n);
}

inline std::vector<double> parse_real_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::string s = v;
  if (!s.empty() && s.front() == '[' && s.back() == ']') s = s.substr(1, s.size() - 2);
  for (const auto& part : split(s, ','))
    if (!trim(part).empty()) out.push_back(parse_real(key, trim(part)));
  return out;
}

inline void apply_setting(RunOptions& o, const std::string& key, const std::string& v) {
  if (key == "dataset") o.dataset = v;
  else if (key == "synth") o.synth = v;
  else if (key == "model") o.sim.model = model_from_string(v);
  else if (key == "w") o.sim.w = parse_real(key, v);
  else if (key == "k") o.sim.k = parse_count(key, v);
  else if (key == "theta" || key == "nudge.theta") o.sim.theta = parse_theta(v);
  else if (key == "feeds") o.sim.feeds = parse_count(key, v);
  else if (key == "seed") o.sim.seed = parse_count(key, v);
  else if (key == "out") o.out = v;
  else if (key == "threads") o.sim.threads = parse_count(key, v);
  else if (key == "nudge.queue_discipline") {
    if (v == "front") o.sim.discipline = QueueDiscipline::front;
    else if (v == "back") o.sim.discipline = QueueDiscipline::back;
    else throw Error("nudge.queue_discipline must be front or back");
  } else if (key == "generator.kind") {
    if (v != "template" && v != "external") throw Error("generator.kind must be template or external");
    o.generator_kind = v;
  } else if (key == "generator.url") o.generator_url = v;
  else if (key == "generator.timeout_ms") o.generator_timeout_ms = static_cast<int>(parse_count(key, v));
  else if (key == "generator.retries") o.generator_retries = static_cast<int>(parse_count(key, v));
  else if (key == "detect.coverage_max") o.thresholds.coverage_max = parse_real(key, v);
  else if (key == "detect.trend_min") o.thresholds.trend_min = parse_real(key, v);
  else if (key == "detect.window") o.window = parse_count(key, v);
  else if (key == "w_values") o.w_values = parse_real_list(key, v);
  else if (key == "checkpoints") {
    o.sim.checkpoints.clear();
    for (double d : parse_real_list(key, v)) o.sim.checkpoints.push_back(static_cast<std::size_t>(d));
  } else throw Error("unknown config key '" + key + "'");
}

inline void apply_config(RunOptions& o, const FlatConfig& cfg) {
  for (const auto& [k, v] : cfg) apply_setting(o, k, v);
}

// "bundled", or comma-separated users=, categories=, subcats=, items=,
// biased=, seed=, history=; unspecified fields take the bundled values.
inline SynthSpec parse_synth_spec(const std::string& s) {
  SynthSpec spec = bundled_spec();
  if (s.empty() || s == "bundled") return spec;
  for (const auto& part : split(s, ',')) {
    const auto eq = part.find('=');
    if (eq == std::string::npos) throw Error("synth spec entries look like key=value");
    const std::string k = trim(part.substr(0, eq)), v = trim(part.substr(eq + 1));
    const std::size_t n = parse_count(k, v);
    if (k == "users") spec.n_users = n;
    else if (k == "categories") spec.n_categories = n;
    else if (k == "subcats") spec.subcats_per_category = n;
    else if (k == "items") spec.n_items = n;
    else if (k == "biased") spec.bias = BiasProfile::automatic(n);
    else if (k == "seed") spec.seed = n;
    else if (k == "history") spec.history_scale = n;
    else throw Error("unknown synth key '" + k + "'");
  }
  return spec;
}

// Dataset path wins over a synth spec; with neither, the bundled corpus.
inline LoadResult load_input(const RunOptions& o) {
  if (!o.dataset.empty()) return load_dataset(o.dataset);
  return {synth_corpus(parse_synth_spec(o.synth)), {}};
}

}  // namespace bheisr
