#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>
#include <vector>

#include "svmcast/utility.hpp"

using namespace svmcast;

namespace {

const NmosParams kCrew{3.49, 7.23, 29.68, 101376.0, 30.0};

ClientClass make_class(int h, double prior, RcDistribution dist, std::vector<double> alphas) {
  ClientClass c;
  c.highest_layer = h;
  c.prior = prior;
  c.dist = std::move(dist);
  c.alphas = std::move(alphas);
  return c;
}

}  // namespace

TEST_CASE("nmos") {
  SUBCASE("sigmoid midpoint") {
    const double v = nmos({kCrew.s_max, kCrew.f_max, kCrew.b_p}, kCrew);
    CHECK(v == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("crew layers near the published scores") {
    // base QCIF@15; first enhancement doubles the frame rate; second adds CIF
    const double l1 = nmos({176.0 * 144.0, 15.0, 30.5}, kCrew);
    const double l2 = nmos({176.0 * 144.0, 30.0, 35.1}, kCrew);
    const double l3 = nmos({352.0 * 288.0, 30.0, 35.2}, kCrew);
    CHECK(std::fabs(l1 - 0.31) <= 0.05);
    CHECK(std::fabs(l2 - 0.48) <= 0.05);
    CHECK(std::fabs(l3 - 0.86) <= 0.05);
  }
  SUBCASE("monotone in every argument") {
    const LayerPlayback base{50000.0, 12.0, 31.0};
    const double v = nmos(base, kCrew);
    CHECK(nmos({60000.0, 12.0, 31.0}, kCrew) >= v);
    CHECK(nmos({50000.0, 14.0, 31.0}, kCrew) >= v);
    CHECK(nmos({50000.0, 12.0, 33.0}, kCrew) >= v);
  }
  SUBCASE("scale invariance in the spatial ratio") {
    NmosParams scaled = kCrew;
    scaled.s_max *= 3.0;
    const LayerPlayback pb{40000.0, 20.0, 32.0};
    const LayerPlayback pb3{120000.0, 20.0, 32.0};
    CHECK(nmos(pb, kCrew) == doctest::Approx(nmos(pb3, scaled)).epsilon(1e-12));
  }
  SUBCASE("bounded") {
    for (double s : {1000.0, 50000.0, 101376.0}) {
      for (double f : {5.0, 15.0, 30.0}) {
        for (double p : {20.0, 30.0, 45.0}) {
          const double v = nmos({s, f, p}, kCrew);
          CHECK(v >= 0.0);
          CHECK(v < 1.0);
        }
      }
    }
  }
}

TEST_CASE("utility_rate") {
  ClientClass c = make_class(3, 1.0, RcDistribution(UniformDist{0.0, 1.0}), {});
  c.prefs = {0.81, 0.9, 1.0};  // 0.9^(h-l)
  CHECK(utility_rate(c, 3, 0.86) == doctest::Approx(0.86));
  CHECK(utility_rate(c, 1, 0.31) == doctest::Approx(0.81 * 0.31));
  c.prefs[0] = 0.0;
  CHECK(utility_rate(c, 1, 0.31) == 0.0);
  CHECK_THROWS_AS(utility_rate(c, 4, 0.5), std::domain_error);
}

TEST_CASE("marginal_utilities") {
  SUBCASE("single layer") {
    CHECK(marginal_utilities({0.44}) == std::vector<double>{0.44});
  }
  SUBCASE("crew published scores") {
    const auto a = marginal_utilities({0.31, 0.48, 0.86});
    REQUIRE(a.size() == 3);
    CHECK(a[0] == doctest::Approx(0.31));
    CHECK(a[1] == doctest::Approx(0.17));
    CHECK(a[2] == doctest::Approx(0.38));
  }
  SUBCASE("telescoping") {
    const std::vector<double> u = {0.2, 0.35, 0.7, 0.92};
    const auto a = marginal_utilities(u);
    double sum = 0.0;
    for (double v : a) sum += v;
    CHECK(sum == doctest::Approx(u.back()).epsilon(1e-15));
  }
  SUBCASE("decreasing sequence rejected") {
    CHECK_THROWS_AS(marginal_utilities({0.5, 0.4}), std::invalid_argument);
  }
}

TEST_CASE("utility table and total utility") {
  std::vector<ClientClass> classes;
  classes.push_back(make_class(1, 0.4, preset_distribution("low-heavy"), {0.5}));
  classes.push_back(make_class(3, 0.6, preset_distribution("bimodal-high"), {0.31, 0.17, 0.38}));
  const UtilityTable table = build_utility_table(classes);

  SUBCASE("u_max is the everyone-served utility") {
    CHECK(table.u_max == doctest::Approx(0.4 * 0.5 + 0.6 * (0.31 + 0.17 + 0.38)).epsilon(1e-15));
    CHECK(total_utility({1e-12, 1e-12, 1e-12}, classes) ==
          doctest::Approx(table.u_max).epsilon(1e-9));
  }
  SUBCASE("delta = 1 serves nobody") {
    CHECK(total_utility({1.0, 1.0, 1.0}, classes) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("single class single layer uniform") {
    std::vector<ClientClass> one;
    one.push_back(make_class(1, 1.0, RcDistribution(UniformDist{0.0, 1.0}), {1.0}));
    CHECK(total_utility({0.4}, one) == doctest::Approx(0.6).epsilon(1e-15));
  }
  SUBCASE("loss + utility = u_max") {
    const std::vector<double> d = {0.3, 0.5, 0.8};
    CHECK(total_utility(d, classes) + utility_loss(d, classes) ==
          doctest::Approx(table.u_max).epsilon(1e-12));
  }
  SUBCASE("matches the direct served-fraction summation") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> pick(0.05, 0.95);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> d = {pick(rng), pick(rng), pick(rng)};
      std::sort(d.begin(), d.end());
      double direct = 0.0;
      for (const auto& c : classes) {
        for (int l = 0; l < c.highest_layer; ++l) {
          direct += c.prior * c.alphas[l] * (1.0 - c.dist.cdf(d[l]));
        }
      }
      CHECK(total_utility(d, classes) == doctest::Approx(direct).epsilon(1e-12));
    }
  }
  SUBCASE("non-increasing in every delta") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> pick(0.1, 0.8);
    for (int t = 0; t < 50; ++t) {
      std::vector<double> d = {pick(rng), pick(rng), pick(rng)};
      std::sort(d.begin(), d.end());
      const double base = total_utility(d, classes);
      for (std::size_t l = 0; l < d.size(); ++l) {
        auto up = d;
        up[l] += 0.05;
        for (std::size_t j = l + 1; j < up.size(); ++j) up[j] = std::max(up[j], up[l]);
        CHECK(total_utility(up, classes) <= base + 1e-12);
      }
    }
  }
  SUBCASE("unordered deltas rejected") {
    CHECK_THROWS_AS(total_utility({0.5, 0.3, 0.8}, classes), std::domain_error);
  }
  SUBCASE("fitted evaluation uses the parametric CDF") {
    auto fitted = classes;
    for (auto& c : fitted) c.fitted = fit_parametric_cdf(c.dist);
    const std::vector<double> d = {0.3, 0.5, 0.8};
    double expect = 0.0;
    for (const auto& c : fitted) {
      for (int l = 0; l < c.highest_layer; ++l) {
        expect += c.prior * c.alphas[l] * c.fitted.eval(d[l]);
      }
    }
    CHECK(utility_loss(d, fitted, true) == doctest::Approx(expect).epsilon(1e-12));
  }
}
