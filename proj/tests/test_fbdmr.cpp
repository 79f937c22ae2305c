#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "bheisr/fbdmr.hpp"

using namespace bheisr;

namespace {

Item item(const std::string& id, const std::string& cat, const std::string& sub) {
  return make_dataset_item(id, cat, sub, "t");
}

Feed feed_over(const std::vector<std::pair<std::string, std::string>>& cs) {
  Feed f;
  for (std::size_t i = 0; i < cs.size(); ++i) f.items.push_back(item("i" + std::to_string(i), cs[i].first, cs[i].second));
  return f;
}

// Inverse standard normal CDF by bisection on erfc.
double probit(double p) {
  double lo = -10, hi = 10;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST(Coverage, DistinctCategoryRatio) {
  Feed one;
  for (int i = 0; i < 10; ++i) one.items.push_back(item("a" + std::to_string(i), "autos", "autos/s0"));
  EXPECT_NEAR(diversity_coverage(one, 17), 1.0 / 17, 1e-12);
  EXPECT_NEAR(diversity_coverage(one, 17), 0.0588, 5e-5);

  const Feed five = feed_over({{"a", "a/1"}, {"b", "b/1"}, {"c", "c/1"}, {"d", "d/1"}, {"e", "e/1"}, {"a", "a/2"}});
  EXPECT_NEAR(diversity_coverage(five, 17), 0.294, 5e-4);
  const Feed two = feed_over({{"a", "a/1"}, {"b", "b/1"}, {"a", "a/1"}});
  EXPECT_DOUBLE_EQ(diversity_coverage(two, 16), 0.125);
  EXPECT_THROW(diversity_coverage(Feed{}, 17), PreconditionError);
}

TEST(Coverage, GeneratedItemsCountEachCategory) {
  Item g = item("g", "a", "a>b");
  g.category_weights = {{"a", 0.5}, {"b", 0.5}};
  Feed f;
  f.items = {g};
  EXPECT_DOUBLE_EQ(diversity_coverage(f, 4), 0.5);
}

TEST(Coverage, LiteralFormula) {
  EXPECT_DOUBLE_EQ(diversity_coverage_formula({{"s", 4}}), 0.0);
  EXPECT_DOUBLE_EQ(diversity_coverage_formula({{"s", 2}, {"t", 2}}), 0.5);
  EXPECT_DOUBLE_EQ(diversity_coverage_formula({{"s", 3}, {"t", 1}}), 0.5);
  EXPECT_NEAR(diversity_coverage_formula({{"s", 5}, {"t", 1}, {"u", 9}}), 2.0 / 3, 1e-12);
  EXPECT_THROW(diversity_coverage_formula({{"s", 0}}), PreconditionError);
}

TEST(Duplicate, PairCounts) {
  EXPECT_DOUBLE_EQ(diversity_duplicate(feed_over({{"a", "x"}, {"a", "x"}, {"a", "x"}})), 1.0);
  EXPECT_DOUBLE_EQ(diversity_duplicate(feed_over({{"a", "x"}, {"a", "y"}, {"b", "z"}})), 0.0);
  EXPECT_NEAR(diversity_duplicate(feed_over({{"a", "x"}, {"a", "x"}, {"b", "z"}})), 2.0 / 6, 1e-12);
  EXPECT_THROW(diversity_duplicate(feed_over({{"a", "x"}})), PreconditionError);
}

TEST(TimeEvolution, Shares) {
  std::vector<Feed> same(4, feed_over({{"a", "x"}, {"a", "y"}}));
  for (const auto& w : time_evolution_report(same, 2)) EXPECT_EQ(w.share, (std::map<std::string, double>{{"a", 1.0}}));

  std::vector<Feed> alt;
  for (int i = 0; i < 6; ++i) alt.push_back(feed_over({{i % 2 ? "b" : "a", "x"}}));
  const auto ws = time_evolution_report(alt, 2);
  ASSERT_EQ(ws.size(), 3u);
  for (const auto& w : ws) {
    EXPECT_DOUBLE_EQ(w.share.at("a"), 0.5);
    EXPECT_DOUBLE_EQ(w.share.at("b"), 0.5);
  }
  EXPECT_THROW(time_evolution_report(alt, 7), PreconditionError);
}

TEST(Ks, ExactQuantiles) {
  std::vector<double> q;
  for (int i = 1; i <= 100; ++i) q.push_back(probit((i - 0.5) / 100));
  const KsResult r = ks_normality(q, 0, 1);
  // the supremum is exactly 0.5 / n here
  EXPECT_NEAR(r.K, 0.005, 1e-12);
  EXPECT_GT(r.p, 0.99);
}

TEST(Ks, ConstantSamples) {
  EXPECT_GE(ks_normality(std::vector<double>(20, 0.0), 0, 1).K, 0.5);
  EXPECT_THROW(ks_normality({1, 2, 3, 4, 5, 6, 7, 8}, 0, 0), PreconditionError);
}

TEST(Ks, SeededNormalDraws) {
  int ok = 0;
  for (int s = 0; s < 20; ++s) {
    std::mt19937_64 gen(1000 + s);
    std::normal_distribution<double> nd;
    std::vector<double> x(1000);
    for (auto& v : x) v = nd(gen);
    ok += ks_normality(x, 0, 1).p > 0.05;
  }
  EXPECT_GE(ok, 17);
}

TEST(Ks, AffineInvariance) {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> nd;
  std::vector<double> x(50), y;
  for (auto& v : x) v = nd(gen);
  for (double v : x) y.push_back(3 + 2.5 * v);
  EXPECT_NEAR(ks_normality(x, 0.1, 1.2).K, ks_normality(y, 3 + 2.5 * 0.1, 2.5 * 1.2).K, 1e-12);
}

TEST(Skewness, Cases) {
  EXPECT_NEAR(skewness({-1, 0, 1}), 0.0, 1e-12);
  EXPECT_GT(skewness({0, 0, 0, 10}), 0.0);
  const std::vector<double> x = {1, 2, 3, 4, 10};
  const double m = 4.0;
  double m2 = 0, m3 = 0;
  for (double v : x) m2 += (v - m) * (v - m) / 5, m3 += (v - m) * (v - m) * (v - m) / 5;
  EXPECT_NEAR(skewness(x), m3 / std::pow(m2, 1.5), 1e-12);
  EXPECT_THROW(skewness({2, 2, 2}), PreconditionError);
  EXPECT_THROW(skewness({1, 2}), PreconditionError);
}

TEST(Classify, AutosNewsUserIsFlagged) {
  std::map<std::string, std::map<std::string, double>> b;
  for (int i = 0; i < 9; ++i) b["P" + std::to_string(i)] = {{"autos", 1.0}, {"news", 1.0}, {"sports", 1.0 + 0.1 * i}};
  b["U21538"] = {{"autos", 2.39}, {"news", 0.44}, {"sports", 1.3}};
  const Classification c = classify_users(b, {"autos", "news", "sports"});
  EXPECT_EQ(c.classes.at("U21538").at("autos"), BeliefClass::ExtremeHigh);
  EXPECT_EQ(c.classes.at("U21538").at("news"), BeliefClass::ExtremeLow);
  EXPECT_EQ(c.fb_users, std::set<std::string>{"U21538"});
}

TEST(Classify, AutosStyleThresholds) {
  // sigma 0.45 around 1.0: half the users at 0.55, half at 1.45
  std::map<std::string, std::map<std::string, double>> b;
  for (int i = 0; i < 20; ++i) b["u" + std::to_string(i)] = {{"autos", i % 2 ? 1.45 : 0.55}};
  const auto st = classify_users(b, {"autos"}).stats.at("autos");
  EXPECT_NEAR(st.mu, 1.0, 1e-12);
  EXPECT_NEAR(st.sigma, 0.45, 1e-12);
  EXPECT_NEAR(st.low, 0.1, 1e-9);
  EXPECT_NEAR(st.high, 1.9, 1e-9);
}

TEST(Classify, LowThresholdFlooredAtZero) {
  std::map<std::string, std::map<std::string, double>> b;
  for (int i = 0; i < 10; ++i) b["u" + std::to_string(i)] = {{"a", i < 8 ? 0.0 : 3.0}};
  const auto c = classify_users(b, {"a"});
  EXPECT_EQ(c.stats.at("a").low, 0.0);
  EXPECT_EQ(c.classes.at("u0").at("a"), BeliefClass::Normal);
}

TEST(Classify, ZeroVarianceAllNormal) {
  std::map<std::string, std::map<std::string, double>> b;
  for (int i = 0; i < 8; ++i) b["u" + std::to_string(i)] = {{"a", 1.0}};
  const auto c = classify_users(b, {"a"});
  EXPECT_TRUE(c.stats.at("a").degenerate);
  for (const auto& [_, m] : c.classes) EXPECT_EQ(m.at("a"), BeliefClass::Normal);
}

TEST(Classify, NeedsEightUsers) {
  std::map<std::string, std::map<std::string, double>> b;
  for (int i = 0; i < 7; ++i) b["u" + std::to_string(i)] = {{"a", 1.0 * i}};
  EXPECT_THROW(classify_users(b, {"a"}), PreconditionError);
}

TEST(Classify, MatchesBruteForceAndRelabeling) {
  std::mt19937_64 gen(21);
  std::uniform_real_distribution<double> u(0, 2);
  const std::vector<std::string> cats = {"a", "b", "c", "d"};
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 8 + static_cast<int>(gen() % 15);
    std::map<std::string, std::map<std::string, double>> b, relabeled;
    for (int i = 0; i < n; ++i) {
      std::map<std::string, double> row;
      for (const auto& c : cats) row[c] = gen() % 5 == 0 ? (gen() % 2 ? 0.0 : 4.5) : u(gen);
      b["u" + std::to_string(100 + i)] = row;
      relabeled["v" + std::to_string(100 + (n - 1 - i))] = row;
    }
    const auto got = classify_users(b, cats);
    std::set<std::string> expect;
    for (const auto& [user, row] : b) {
      bool hi = false, lo = false;
      for (const auto& c : cats) {
        double s = 0, s2 = 0;
        for (const auto& [_, r] : b) s += r.at(c);
        const double mu = s / n;
        for (const auto& [_, r] : b) s2 += (r.at(c) - mu) * (r.at(c) - mu);
        const double sd = std::sqrt(s2 / n);
        hi |= row.at(c) > mu + 2 * sd;
        lo |= row.at(c) < std::max(0.0, mu - 2 * sd);
      }
      if (hi && lo) expect.insert(user);
    }
    EXPECT_EQ(got.fb_users, expect);
    EXPECT_EQ(classify_users(relabeled, cats).fb_users.size(), expect.size());
  }
}

TEST(DetectSystem, Preconditions) {
  DetectionReport r;
  r.coverage = {0.1};
  EXPECT_THROW(detect_fb_system(r), PreconditionError);
}

TEST(DetectSystem, NarrowRisingFeedIsFlagged) {
  std::vector<Feed> feeds;
  for (int t = 0; t < 6; ++t) {
    std::vector<std::pair<std::string, std::string>> cs;
    for (int i = 0; i < 10; ++i) cs.push_back({i < 7 + t / 2 ? "a" : "b", "x"});
    feeds.push_back(feed_over(cs));
  }
  DetectionReport r = forward_report(feeds, 17, 2);
  EXPECT_EQ(r.preferred_category, "a");
  EXPECT_TRUE(detect_fb_system(r));

  std::vector<Feed> wide;
  for (int t = 0; t < 6; ++t) {
    std::vector<std::pair<std::string, std::string>> cs;
    for (int i = 0; i < 10; ++i) cs.push_back({"c" + std::to_string((i + t * 3) % 17), "x"});
    wide.push_back(feed_over(cs));
  }
  EXPECT_FALSE(detect_fb_system(forward_report(wide, 17, 2)));
}

TEST(Histograms, Csv) {
  std::map<std::string, BeliefNetwork> nets;
  for (int i = 0; i < 3; ++i) {
    BeliefNetwork n("u" + std::to_string(i), {"a"});
    n.add_clicks("a", "a/x", 1);
    if (i) n.add_clicks("a", "a/y", 1);
    nets.emplace(n.user_id(), n);
  }
  std::ostringstream out;
  write_belief_histograms(out, nets, {"a"});
  const std::string s = out.str();
  EXPECT_NE(s.find("a,0.00,0.10,1"), std::string::npos);
  EXPECT_NE(s.find("a,1.00,1.10,2"), std::string::npos);
}
