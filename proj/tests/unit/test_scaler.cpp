#include <doctest.h>

#include <cmath>
#include <vector>

#include "ltvstream/distributions.hpp"
#include "ltvstream/errors.hpp"
#include "ltvstream/rng.hpp"
#include "ltvstream/scaler.hpp"
#include "../support/oracles.hpp"

using namespace ltvstream;
using doctest::Approx;

TEST_CASE("first observation scales to zero") {
  StandardScaler s;
  CHECK(s.scale_update(42.0) == 0.0);
  RobustScaler r;
  CHECK(r.scale_update(42.0) == 0.0);
  OnlineScaler o;
  CHECK(o.scale_update(-3.0) == 0.0);
}

TEST_CASE("scale_update uses the statistics from before the update") {
  StandardScaler s;
  for (double x : {1.0, 2.0, 3.0}) s.update(x);
  const AffineMap before = s.snapshot();
  CHECK(s.scale_update(10.0) == Approx(before.scale(10.0)));
  CHECK(s.count() == 4);
}

TEST_CASE("standard scaler tracks mean and std") {
  Rng rng(10);
  StandardScaler s;
  for (int i = 0; i < 100000; ++i) s.update(10.0 + 2.0 * rng.normal());
  CHECK(std::abs(s.mean() - 10.0) < 0.05);
  CHECK(std::abs(s.stddev() - 2.0) < 0.05);
}

TEST_CASE("robust scaler median survives Cauchy samples") {
  Rng rng(12);
  RobustScaler r;
  std::vector<double> xs;
  for (int i = 0; i < 100000; ++i) {
    const double x = sample_student_t({5.0, 1.0, 1.0}, rng);
    xs.push_back(x);
    r.update(x);
  }
  CHECK(std::abs(r.median() - 5.0) < 0.1);
  CHECK(std::abs(r.median() - oracle::median(xs)) < 0.1);
  // Five-marker estimates of the outer quartiles are biased on Cauchy tails.
  CHECK(r.iqr() == Approx(oracle::quantile(xs, 0.75) - oracle::quantile(xs, 0.25)).epsilon(0.2));
}

TEST_CASE("robust scaler quartiles track a Gaussian stream") {
  Rng rng(13);
  RobustScaler r;
  for (int i = 0; i < 100000; ++i) r.update(10.0 + 2.0 * rng.normal());
  CHECK(r.median() == Approx(10.0).epsilon(0.005));
  CHECK(r.iqr() == Approx(2.0 * 1.3489795).epsilon(0.02));
}

TEST_CASE("P2 quantile is exact below five observations") {
  P2Quantile q(0.5);
  for (double x : {4.0, 1.0, 3.0}) q.add(x);
  CHECK(q.value() == 3.0);
  P2Quantile restored = P2Quantile::from_state(q.state());
  restored.add(2.0);
  q.add(2.0);
  CHECK(restored.value() == q.value());
}

TEST_CASE("round trip with one snapshot") {
  for (ScalerKind kind : {ScalerKind::standard, ScalerKind::robust}) {
    OnlineScaler s(kind);
    Rng rng(2);
    for (int i = 0; i < 100; ++i) s.update(rng.normal() * 3.0 + 1.0);
    const AffineMap m = s.snapshot();
    CHECK(m.unscale(m.scale(7.3)) == Approx(7.3).epsilon(1e-9));
    CHECK(m.unscale(0.0) == m.center);
  }
}

TEST_CASE("affine arithmetic") {
  const AffineMap m{10.0, 4.0};
  CHECK(m.unscale(1.0) == 14.0);
  CHECK(m.scale(14.0) == 1.0);
  const AffineMap flat{5.0, 0.0};
  CHECK(flat.unscale(3.0) == 5.0);
  CHECK(std::isfinite(flat.scale(6.0)));
}

TEST_CASE("unscale centers at the median or mean") {
  RobustScaler r;
  StandardScaler s;
  for (double x : {1.0, 2.0, 3.0, 4.0, 100.0, 5.0, 6.0, 7.0, 8.0}) {
    r.update(x);
    s.update(x);
  }
  CHECK(r.unscale(0.0) == Approx(r.median()));
  CHECK(s.unscale(0.0) == Approx(s.mean()));
}

TEST_CASE("robust scaler breakdown under outliers") {
  Rng rng(44);
  RobustScaler clean, dirty;
  for (int i = 0; i < 50000; ++i) {
    const double x = 100.0 + 10.0 * rng.normal();
    clean.update(x);
    dirty.update(rng.uniform() < 0.1 ? 1e6 * (1.0 + rng.uniform()) : x);
  }
  CHECK(std::abs(dirty.median() - clean.median()) / clean.median() < 0.05);
}

TEST_CASE("scaler kind parsing") {
  CHECK(parse_scaler_kind("robust") == ScalerKind::robust);
  CHECK(parse_scaler_kind("standard") == ScalerKind::standard);
  CHECK(to_string(ScalerKind::robust) == "robust");
  CHECK_THROWS_AS(parse_scaler_kind("minmax"), ConfigError);
}
