#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "ltvstream/adaptation.hpp"
#include "ltvstream/distributions.hpp"
#include "ltvstream/errors.hpp"
#include "ltvstream/nuts.hpp"
#include "../support/oracles.hpp"

using namespace ltvstream;
using doctest::Approx;

namespace {

DensityGraph iid_normal(std::size_t dim, double sd = 1.0) {
  return DensityGraph(dim, [sd](std::span<const double> t, std::span<double> g) {
    double lp = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      lp += -0.5 * t[i] * t[i] / (sd * sd);
      g[i] = -t[i] / (sd * sd);
    }
    return lp;
  });
}

DensityGraph correlated_normal(double rho) {
  const double det = 1.0 - rho * rho;
  return DensityGraph(2, [rho, det](std::span<const double> t, std::span<double> g) {
    const double x = t[0], y = t[1];
    g[0] = -(x - rho * y) / det;
    g[1] = -(y - rho * x) / det;
    return -0.5 * (x * x - 2 * rho * x * y + y * y) / det;
  });
}

// y_i ~ N(mu, 1), mu ~ N(0, 1).
DensityGraph normal_mean_posterior(const std::vector<double>& y, double prior_sd = 1.0) {
  return DensityGraph(1, [y, prior_sd](std::span<const double> t, std::span<double> g) {
    const double mu = t[0];
    double lp = -0.5 * mu * mu / (prior_sd * prior_sd);
    double d = -mu / (prior_sd * prior_sd);
    for (double v : y) {
      lp += -0.5 * (v - mu) * (v - mu);
      d += v - mu;
    }
    g[0] = d;
    return lp;
  });
}

SamplerConfig small_config(std::size_t samples, std::size_t warmup) {
  SamplerConfig c;
  c.num_samples = samples;
  c.num_warmup = warmup;
  c.extra_warmup = 0;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  SamplerConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.num_samples == 500);
  CHECK(c.num_warmup == 1500);
  CHECK(c.extra_warmup == 500);
  CHECK(extra_warmup_rule_of_thumb(500) == 1500);
  c.target_accept = 1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.num_samples = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.max_tree_depth = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("dual averaging settles on a step size matching the target") {
  // Acceptance modelled as exp(-eps): the fixed point is eps = -log(0.8).
  DualAveraging da;
  da.restart(1.0);
  double eps = 1.0;
  for (int i = 0; i < 3000; ++i) eps = da.learn(std::exp(-eps), 0.8);
  CHECK(da.final_step_size() == Approx(-std::log(0.8)).epsilon(0.02));
}

TEST_CASE("regularized variance shrinks toward 1e-3") {
  RunningVariance rv;
  rv.reset(1);
  for (double x : {1.0, 2.0, 3.0, 4.0, 5.0}) rv.add(std::vector<double>{x});
  const double n = 5.0, var = 2.5;
  CHECK(rv.regularized_variance()[0] == Approx(n / (n + 5) * var + 1e-3 * 5 / (n + 5)));
}

TEST_CASE("window schedule") {
  WindowSchedule s(1000);
  CHECK(s.adapts_metric());
  CHECK_FALSE(s.in_window(10));
  CHECK(s.in_window(75));
  CHECK(s.window_ends(99));
  CHECK_FALSE(s.in_window(960));
  WindowSchedule shorter(100);
  CHECK(shorter.adapts_metric());
  CHECK(shorter.init_buffer() == 15);
  CHECK(shorter.term_buffer() == 10);
  CHECK(shorter.base_window() == 75);
  CHECK_FALSE(WindowSchedule(19).adapts_metric());
}

TEST_CASE("warmup adapts the metric to unit variances") {
  const auto g = iid_normal(2);
  auto cfg = small_config(100, 1000);
  auto state = initial_state({1.0, -1.0}, cfg, 17);
  state = warmup(g, cfg, state, 1000);
  for (double m : state.inverse_mass_diag) {
    CHECK(m >= 0.5);
    CHECK(m <= 2.0);
  }
}

TEST_CASE("warmup on a correlated target reaches the acceptance target") {
  const auto g = correlated_normal(0.9);
  auto cfg = small_config(100, 1000);
  WarmupReport report;
  const auto state = warmup(g, cfg, initial_state({0.5, 0.5}, cfg, 3), 1000, &report);
  REQUIRE(report.accept_stats.size() == 1000);
  const double tail_mean =
      std::accumulate(report.accept_stats.end() - 100, report.accept_stats.end(), 0.0) / 100.0;
  CHECK(std::abs(tail_mean - 0.8) < 0.1);
  CHECK(state.step_size > 0.0);
}

TEST_CASE("zero warmup steps leave the state unchanged") {
  const auto g = iid_normal(3);
  auto cfg = small_config(10, 10);
  const auto state = initial_state({0.1, 0.2, 0.3}, cfg, 5);
  const auto after = warmup(g, cfg, state, 0);
  CHECK(after.position == state.position);
  CHECK(after.step_size == state.step_size);
  CHECK(after.inverse_mass_diag == state.inverse_mass_diag);
  CHECK(after.rng == state.rng);
}

TEST_CASE("persistent divergence is an error carrying the count") {
  const DensityGraph cliff(1, [](std::span<const double> t, std::span<double> g) {
    g[0] = -1e12 * t[0];
    return std::abs(t[0]) > 1e-9 ? -kInf : 0.0;
  });
  auto cfg = small_config(10, 40);
  auto state = initial_state({0.0}, cfg, 1);
  state.step_size = 1.0;
  try {
    warmup(cliff, cfg, state, 40);
    FAIL("expected SamplerError");
  } catch (const SamplerError& e) {
    CHECK(e.divergence_count() > 20);
  }
}

TEST_CASE("standard normal draws") {
  const auto g = iid_normal(1);
  auto cfg = small_config(2000, 500);
  auto state = warmup(g, cfg, initial_state({0.3}, cfg, 21), 500);
  const auto result = sample(g, cfg, state);
  const auto draws = result.chain.column(0);
  REQUIRE(draws.size() == 2000);
  CHECK(std::abs(oracle::mean(draws)) < 0.1);
  CHECK(std::abs(oracle::variance(draws) - 1.0) < 0.15);
}

TEST_CASE("standard normal passes a KS test") {
  const auto g = iid_normal(1);
  auto cfg = small_config(25000, 500);
  const auto result = sample(g, cfg, warmup(g, cfg, initial_state({0.0}, cfg, 99), 500));
  const auto draws = oracle::thin(result.chain.column(0), 5);
  REQUIRE(draws.size() == 5000);
  CHECK(oracle::ks_pvalue(oracle::ks_statistic(draws, oracle::normal_cdf), 5000) > 0.01);
  CHECK(result.chain.mean_accept() > 0.6);
}

TEST_CASE("conjugate normal-normal posterior is recovered") {
  Rng data_rng(2024);
  std::vector<double> y;
  for (int i = 0; i < 10; ++i) y.push_back(2.0 + data_rng.normal());
  const auto exact = oracle::conjugate_normal(y, 1.0, 0.0, 1.0);
  const auto g = normal_mean_posterior(y);
  auto cfg = small_config(2000, 1000);
  const auto result = sample(g, cfg, warmup(g, cfg, initial_state({0.0}, cfg, 8), 1000));
  const auto draws = result.chain.column(0);
  const double se = oracle::batch_means_se(draws);
  CHECK(std::abs(oracle::mean(draws) - exact.mean) < 3 * se);
  CHECK(oracle::variance(draws) == Approx(exact.variance).epsilon(0.15));
}

TEST_CASE("tree depth cap is respected") {
  const auto g = iid_normal(4, 3.0);
  auto cfg = small_config(200, 100);
  cfg.max_tree_depth = 1;
  const auto result = sample(g, cfg, warmup(g, cfg, initial_state({0, 0, 0, 0}, cfg, 2), 100));
  CHECK(result.chain.size() == 200);
  for (int d : result.chain.tree_depths) CHECK(d <= 1);
  for (int l : result.chain.leapfrog_steps) CHECK(l <= 2);
}

TEST_CASE("adding a constant to the log density leaves seeded draws bit-identical") {
  const auto g = correlated_normal(0.5);
  const auto shifted = g.shifted(100.0);
  auto cfg = small_config(300, 200);
  const auto state = warmup(g, cfg, initial_state({0.2, -0.1}, cfg, 12), 200);
  const auto a = sample(g, cfg, state);
  const auto b = sample(shifted, cfg, state);
  CHECK(a.chain.draws == b.chain.draws);
  CHECK(a.chain.tree_depths == b.chain.tree_depths);

  // Warmup decisions depend on energy differences, so they agree up to
  // rounding in the accumulated log density.
  const auto wa = warmup(g, cfg, initial_state({0.2, -0.1}, cfg, 12), 200);
  const auto wb = warmup(shifted, cfg, initial_state({0.2, -0.1}, cfg, 12), 200);
  CHECK(wa.step_size == Approx(wb.step_size).epsilon(1e-4));
}

TEST_CASE("identical seeds reproduce identical chains") {
  const auto g = correlated_normal(0.7);
  auto cfg = small_config(200, 150);
  OnlineSampler a(cfg, {0.1, 0.1}, 77), b(cfg, {0.1, 0.1}, 77);
  CHECK(a.fit(g).chain.draws == b.fit(g).chain.draws);
  CHECK(a.fit(g).chain.draws == b.fit(g).chain.draws);
}

TEST_CASE("a single batch equals warmup followed by sampling") {
  const auto g = iid_normal(2);
  auto cfg = small_config(150, 120);
  OnlineSampler online(cfg, {0.4, 0.4}, 31);
  const auto fit = online.fit(g);
  const auto manual = sample(g, cfg, warmup(g, cfg, initial_state({0.4, 0.4}, cfg, 31), 120));
  CHECK(fit.chain.draws == manual.chain.draws);
  CHECK(fit.diagnostics.warmup_steps == 120);
}

TEST_CASE("carrying the state with no extra warmup keeps sampling the same distribution") {
  const auto g = iid_normal(1);
  auto cfg = small_config(5000, 500);
  OnlineSampler online(cfg, {0.0}, 404);
  auto first = online.fit(g).chain.column(0);
  const auto second = online.fit(g).chain.column(0);
  CHECK(online.batches_fit() == 2);
  first.insert(first.end(), second.begin(), second.end());

  auto long_cfg = small_config(10000, 500);
  OnlineSampler single(long_cfg, {0.0}, 405);
  const auto reference = single.fit(g).chain.column(0);
  CHECK(oracle::ks_two_sample_pvalue(oracle::thin(first, 5), oracle::thin(reference, 5)) > 0.01);
}

TEST_CASE("later batches run the extra warmup") {
  const auto g = iid_normal(1);
  auto cfg = small_config(50, 100);
  cfg.extra_warmup = 30;
  OnlineSampler online(cfg, {0.0}, 1);
  CHECK(online.fit(g).diagnostics.warmup_steps == 100);
  CHECK(online.fit(g).diagnostics.warmup_steps == 30);
  CHECK(online.state().adaptation.adapted_steps == 130);
}

TEST_CASE("carried state lets a short-warmup chain converge across batches") {
  // Batch 1 starts far from the posterior with a short warmup and shallow
  // trees, so its draws still carry the transient; by batch 10 the carried
  // chain has settled.
  int improved = 0;
  const double truth = 3.0;
  for (int seed = 0; seed < 20; ++seed) {
    Rng data(1000 + seed);
    auto cfg = small_config(8, 10);
    cfg.extra_warmup = 10;
    cfg.max_tree_depth = 1;
    OnlineSampler online(cfg, {-60.0}, seed);
    double first = 0.0, last = 0.0;
    for (int b = 1; b <= 10; ++b) {
      std::vector<double> y;
      for (int i = 0; i < 100; ++i) y.push_back(truth + data.normal());
      const auto chain = online.fit(normal_mean_posterior(y, 100.0)).chain;
      const double m = oracle::mean(chain.column(0));
      if (b == 1) first = m;
      if (b == 10) last = m;
    }
    if (std::abs(last - truth) < std::abs(first - truth)) ++improved;
  }
  CHECK(improved >= 18);
}

TEST_CASE("run_online scores each batch before the sampler sees it") {
  // Each batch is a distinct normal mean; the chain handed to predict for
  // batch j must be the one produced while fitting batch j-1.
  struct Batch {
    int id;
    double center;
  };
  std::vector<Batch> stream{{1, 0.0}, {2, 5.0}, {3, -5.0}, {4, 2.0}};
  std::size_t cursor = 0;
  std::function<std::optional<Batch>()> next = [&]() -> std::optional<Batch> {
    if (cursor >= stream.size()) return std::nullopt;
    return stream[cursor++];
  };
  auto cfg = small_config(100, 150);
  cfg.extra_warmup = 100;
  OnlineSampler sampler(cfg, {0.0}, 9);

  std::vector<std::string> events;
  std::vector<std::vector<double>> fitted_chains;
  std::vector<std::vector<double>> scored_with;
  OnlineHooks<Batch> hooks;
  hooks.bind = [&](const Batch& b) {
    events.push_back("fit" + std::to_string(b.id));
    const double c = b.center;
    return DensityGraph(1, [c](std::span<const double> t, std::span<double> g) {
      g[0] = -(t[0] - c) * 25.0;
      return -0.5 * 25.0 * (t[0] - c) * (t[0] - c);
    });
  };
  hooks.predict = [&](std::size_t idx, const Batch& b, const SampleChain& chain, bool in_sample) {
    CHECK(static_cast<int>(idx) == b.id);
    CHECK(in_sample == (idx == 1));
    events.push_back("score" + std::to_string(b.id));
    scored_with.push_back(chain.draws);
  };
  hooks.fitted = [&](const Batch&, const BatchFit& fit, const SamplerState&) { fitted_chains.push_back(fit.chain.draws); };

  CHECK(run_online(next, sampler, hooks) == 4);
  const std::vector<std::string> expected{"fit1", "score1", "score2", "fit2", "score3", "fit3", "score4", "fit4"};
  CHECK(events == expected);
  REQUIRE(scored_with.size() == 4);
  CHECK(scored_with[0] == fitted_chains[0]);
  for (std::size_t j = 1; j < 4; ++j) CHECK(scored_with[j] == fitted_chains[j - 1]);
  // The chain that scored batch 2 never saw center 5.
  double m = 0.0;
  for (double v : scored_with[1]) m += v;
  CHECK(std::abs(m / scored_with[1].size()) < 1.0);
}

TEST_CASE("effective sample size") {
  Rng rng(3);
  std::vector<double> iid;
  for (int i = 0; i < 4000; ++i) iid.push_back(rng.normal());
  CHECK(effective_sample_size(iid) > 3000);
  std::vector<double> ar{0.0};
  for (int i = 1; i < 4000; ++i) ar.push_back(0.95 * ar.back() + rng.normal());
  CHECK(effective_sample_size(ar) < 400);
}
