#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "ltvstream/diff_core.hpp"
#include "ltvstream/distributions.hpp"

using namespace ltvstream;
using doctest::Approx;

namespace {

DensityGraph standard_normal(std::size_t dim = 1) {
  return DensityGraph(dim, [](std::span<const double> t, std::span<double> g) {
    double lp = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
      lp += -0.5 * t[i] * t[i] - kLogSqrt2Pi;
      g[i] = -t[i];
    }
    return lp;
  });
}

DensityGraph standard_cauchy() {
  return DensityGraph(1, [](std::span<const double> t, std::span<double> g) {
    g[0] = -2.0 * t[0] / (1.0 + t[0] * t[0]);
    return logpdf_student_t(t[0], {0, 1, 1});
  });
}

}  // namespace

TEST_CASE("evaluate returns value and gradient") {
  const auto n = standard_normal();
  const auto at0 = evaluate(n, std::vector<double>{0.0});
  CHECK(at0.log_density == Approx(-0.918939).epsilon(1e-6));
  CHECK(at0.gradient[0] == 0.0);
  CHECK(evaluate(n, std::vector<double>{2.0}).gradient[0] == -2.0);

  const auto c = evaluate(standard_cauchy(), std::vector<double>{1.0});
  CHECK(c.log_density == Approx(-1.837877).epsilon(1e-6));
  CHECK(c.gradient[0] == Approx(-1.0));
}

TEST_CASE("evaluate is pure") {
  const auto g = standard_cauchy();
  const std::vector<double> theta{0.37};
  const auto a = evaluate(g, theta);
  const auto b = evaluate(g, theta);
  CHECK(a.log_density == b.log_density);
  CHECK(a.gradient == b.gradient);
}

TEST_CASE("non-finite results are reported as minus infinity") {
  const DensityGraph nan_graph(1, [](std::span<const double>, std::span<double> g) {
    g[0] = 0.0;
    return std::nan("");
  });
  CHECK(evaluate(nan_graph, std::vector<double>{0.0}).log_density == -kInf);
  const DensityGraph bad_grad(1, [](std::span<const double>, std::span<double> g) {
    g[0] = std::nan("");
    return 0.0;
  });
  CHECK(evaluate(bad_grad, std::vector<double>{0.0}).log_density == -kInf);
}

TEST_CASE("dimension mismatch is rejected") {
  CHECK_THROWS_AS(evaluate(standard_normal(2), std::vector<double>{0.0}), std::invalid_argument);
}

TEST_CASE("shifted graph adds a constant and keeps the gradient") {
  const auto g = standard_normal(2);
  const auto s = g.shifted(100.0);
  const std::vector<double> theta{0.3, -1.1};
  CHECK(evaluate(s, theta).log_density == Approx(evaluate(g, theta).log_density + 100.0));
  CHECK(evaluate(s, theta).gradient == evaluate(g, theta).gradient);
}

TEST_CASE("check_gradient") {
  SUBCASE("smooth quadratic") {
    const auto r = check_gradient(standard_normal(), std::vector<double>{0.5}, 1e-5);
    CHECK(r.max_rel_error < 1e-6);
    CHECK(r.passed(1e-6));
  }
  SUBCASE("a wrong gradient is caught and located") {
    const DensityGraph wrong(3, [](std::span<const double> t, std::span<double> g) {
      g[0] = -t[0];
      g[1] = -2.0 * t[1];  // should be -t[1]
      g[2] = -t[2];
      return -0.5 * (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]);
    });
    for (const auto& r : {check_gradient(wrong, std::vector<double>{0.1, 0.7, -0.4}, 1e-5),
                          check_gradient_ladder(wrong, std::vector<double>{0.1, 0.7, -0.4})}) {
      CHECK(r.worst_coordinate == 1);
      CHECK(r.max_rel_error > 0.4);
      CHECK_FALSE(r.passed(1e-4));
    }
  }
  SUBCASE("non-finite finite differences are reported") {
    const DensityGraph edge(1, [](std::span<const double> t, std::span<double> g) {
      g[0] = 1.0 / t[0];
      return std::log(t[0]);
    });
    const auto r = check_gradient(edge, std::vector<double>{1e-7}, 1e-5);
    CHECK(r.nonfinite_coordinates.size() == 1);
    CHECK_FALSE(r.passed(1.0));
  }
  SUBCASE("the step ladder survives a kink and a large offset") {
    // |x| has a kink at 0 that a step of 1e-2 would cross; the offset makes
    // tiny steps cancel.
    const DensityGraph kinked(1, [](std::span<const double> t, std::span<double> g) {
      g[0] = -3.0 * (t[0] > 0 ? 1.0 : -1.0);
      return 1e8 - 3.0 * std::abs(t[0]);
    });
    CHECK(check_gradient_ladder(kinked, std::vector<double>{3e-3}).passed(1e-4));
    CHECK_FALSE(check_gradient(kinked, std::vector<double>{3e-3}, 1e-2).passed(1e-4));
    CHECK_FALSE(check_gradient(kinked, std::vector<double>{3e-3}, 1e-9).passed(1e-4));
  }
}
