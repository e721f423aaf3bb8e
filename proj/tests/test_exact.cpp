#include <doctest.h>

#include <cmath>
#include <map>

#include "oracles.hpp"
#include "taumlmc/error.hpp"
#include "taumlmc/exact.hpp"

using namespace taumlmc;

TEST_CASE("absorbing initial state") {
  const auto model = make_scaled(oracle::decay(100, 0));
  const auto path = simulate_exact(model, 5.0, PathStreams{1, 0, 0});
  CHECK(path.final_state.counts[0] == 0);
  CHECK(path.events == 0);
  CHECK(path.firings[0] == 0);
  CHECK(estimate_event_rate(model) == 0.0);
}

TEST_CASE("event rate at the initial state") {
  auto m = oracle::dimerization(1e6);
  CHECK(estimate_event_rate(make_scaled(m)) ==
        doctest::Approx(1e6 * (0.2 * (0.2 - 1e-6)) + 1e6 * 0.2).epsilon(1e-12));
  CHECK(estimate_event_rate(make_scaled(oracle::decay(100, 100))) == doctest::Approx(100.0));
}

TEST_CASE("pure decay follows the binomial law") {
  const auto model = make_scaled(oracle::decay(1000, 1000));
  const int n = 10000;
  const double p = std::exp(-1.0);
  std::map<std::int64_t, std::uint64_t> counts;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const auto path = simulate_exact(model, 1.0, PathStreams{2, 0, std::uint64_t(i)});
    const auto x = path.final_state.counts[0];
    REQUIRE(path.events == std::uint64_t(1000 - x));
    ++counts[x];
    sum += double(x);
    sum2 += double(x) * double(x);
  }
  const double mean = sum / n;
  const double var = (sum2 - n * mean * mean) / (n - 1);
  const double mu2 = 1000 * p * (1 - p);
  const double mu4 = 1000 * p * (1 - p) * (1 + 3 * (1000 - 2) * p * (1 - p));
  CHECK(std::abs(mean - 1000 * p) < 3 * std::sqrt(mu2 / n));
  CHECK(std::abs(var - mu2) < 4 * oracle::variance_se(mu2, mu4, n));
  const auto cells = oracle::folded_cells([&](std::int64_t k) { return oracle::binomial_pmf(1000, p, k); },
                                          [&](std::int64_t k) { return oracle::binomial_cdf(1000, p, k); },
                                          300, 440);
  CHECK(oracle::chi_square_pvalue(counts, n, 300, cells) > 1e-3);
}

TEST_CASE("dimerization conserves A + 2B along exact paths") {
  const auto model = make_scaled(oracle::dimerization(1000));
  ExactOptions options;
  std::uint64_t jumps = 0;
  bool conserved = true;
  bool admissible = true;
  options.on_jump = [&](double, std::span<const std::int64_t> before, std::span<const std::int64_t> after) {
    ++jumps;
    conserved = conserved && before[0] + 2 * before[1] == after[0] + 2 * after[1];
    admissible = admissible && after[0] >= 0 && after[1] >= 0;
  };
  const auto path = simulate_exact(model, 0.3, PathStreams{3, 0, 0}, options);
  CHECK(conserved);
  CHECK(admissible);
  CHECK(jumps == path.events);
  CHECK(path.events == path.firings[0] + path.firings[1]);
  CHECK(path.final_state.counts[0] + 2 * path.final_state.counts[1] == 600);
}

TEST_CASE("exact paths are reproducible") {
  const auto model = make_scaled(oracle::dimerization(1000));
  const auto a = simulate_exact(model, 0.3, PathStreams{4, 0, 9});
  const auto b = simulate_exact(model, 0.3, PathStreams{4, 0, 9});
  const auto c = simulate_exact(model, 0.3, PathStreams{4, 0, 10});
  CHECK(a.final_state == b.final_state);
  CHECK(a.firings == b.firings);
  CHECK(a.firings != c.firings);
}

TEST_CASE("recording on a grid") {
  const auto model = make_scaled(oracle::decay(100, 100));
  ExactOptions options;
  options.record_step = 0.25;
  const auto path = simulate_exact(model, 1.0, PathStreams{5, 0, 0}, options);
  REQUIRE(path.trajectory.size() == 5);
  for (std::size_t i = 0; i < 5; ++i) CHECK(path.trajectory[i].time == doctest::Approx(0.25 * double(i)));
  CHECK(path.trajectory.front().counts[0] == 100);
  CHECK(path.trajectory.back().counts == path.final_state.counts);
  for (std::size_t i = 1; i < 5; ++i) CHECK(path.trajectory[i].counts[0] <= path.trajectory[i - 1].counts[0]);
}

TEST_CASE("event budget") {
  const auto model = make_scaled(oracle::dimerization(1e4));
  ExactOptions options;
  options.event_budget = 100;
  CHECK_THROWS_AS(simulate_exact(model, 0.3, PathStreams{6, 0, 0}, options), EventBudgetExceeded);
}
