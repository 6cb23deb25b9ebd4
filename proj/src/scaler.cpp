#include "ltvstream/scaler.hpp"

#include <algorithm>
#include <cmath>

#include "ltvstream/errors.hpp"

namespace ltvstream {

double AffineMap::scale(double x) const noexcept { return (x - center) / std::max(spread, kSpreadFloor); }

double AffineMap::unscale(double z) const noexcept { return spread > 0.0 ? center + z * spread : center; }

void StandardScaler::update(double x) noexcept {
  ++count_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (x - mean_);
}

double StandardScaler::stddev() const noexcept {
  return count_ ? std::sqrt(m2_ / static_cast<double>(count_)) : 0.0;
}

AffineMap StandardScaler::snapshot() const noexcept { return {mean_, stddev()}; }

double StandardScaler::scale_update(double x) noexcept {
  const double z = count_ ? scale(x) : 0.0;
  update(x);
  return z;
}

P2Quantile::P2Quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("quantile", "probability must lie in (0, 1)");
  s_.p = p;
}

P2Quantile P2Quantile::from_state(const State& s) {
  P2Quantile q(s.p);
  q.s_ = s;
  return q;
}

void P2Quantile::add(double x) noexcept {
  auto& h = s_.heights;
  auto& n = s_.positions;
  auto& np = s_.desired;
  const double p = s_.p;
  if (s_.count < 5) {
    h[s_.count++] = x;
    if (s_.count == 5) {
      std::sort(h.begin(), h.end());
      n = {1.0, 2.0, 3.0, 4.0, 5.0};
      np = {1.0, 1.0 + 2.0 * p, 1.0 + 4.0 * p, 3.0 + 2.0 * p, 5.0};
    }
    return;
  }
  ++s_.count;

  std::size_t k;
  if (x < h[0]) {
    h[0] = x;
    k = 0;
  } else if (x < h[1]) {
    k = 0;
  } else if (x < h[2]) {
    k = 1;
  } else if (x < h[3]) {
    k = 2;
  } else if (x <= h[4]) {
    k = 3;
  } else {
    h[4] = x;
    k = 3;
  }
  for (std::size_t i = k + 1; i < 5; ++i) n[i] += 1.0;
  const std::array<double, 5> increments{0.0, 0.5 * p, p, 0.5 * (1.0 + p), 1.0};
  for (std::size_t i = 0; i < 5; ++i) np[i] += increments[i];

  for (std::size_t i = 1; i <= 3; ++i) {
    const double d = np[i] - n[i];
    if ((d >= 1.0 && n[i + 1] - n[i] > 1.0) || (d <= -1.0 && n[i - 1] - n[i] < -1.0)) {
      const double sign = d > 0.0 ? 1.0 : -1.0;
      const double parabolic =
          h[i] + sign / (n[i + 1] - n[i - 1]) *
                     ((n[i] - n[i - 1] + sign) * (h[i + 1] - h[i]) / (n[i + 1] - n[i]) +
                      (n[i + 1] - n[i] - sign) * (h[i] - h[i - 1]) / (n[i] - n[i - 1]));
      if (h[i - 1] < parabolic && parabolic < h[i + 1]) {
        h[i] = parabolic;
      } else {
        const std::size_t j = sign > 0.0 ? i + 1 : i - 1;
        h[i] += sign * (h[j] - h[i]) / (n[j] - n[i]);
      }
      n[i] += sign;
    }
  }
}

double P2Quantile::value() const noexcept {
  if (s_.count == 0) return 0.0;
  if (s_.count >= 5) return s_.heights[2];
  std::array<double, 5> sorted = s_.heights;
  std::sort(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(s_.count));
  const double pos = s_.p * static_cast<double>(s_.count - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s_.count - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

void RobustScaler::update(double x) noexcept {
  q1_.add(x);
  median_.add(x);
  q3_.add(x);
}

double RobustScaler::iqr() const noexcept { return std::max(0.0, q3_.value() - q1_.value()); }

AffineMap RobustScaler::snapshot() const noexcept { return {median(), iqr()}; }

double RobustScaler::scale_update(double x) noexcept {
  const double z = count() ? scale(x) : 0.0;
  update(x);
  return z;
}

ScalerKind parse_scaler_kind(std::string_view name) {
  if (name == "robust") return ScalerKind::robust;
  if (name == "standard") return ScalerKind::standard;
  throw ConfigError("scaler", "expected 'robust' or 'standard', got '" + std::string(name) + "'");
}

std::string_view to_string(ScalerKind kind) { return kind == ScalerKind::robust ? "robust" : "standard"; }

OnlineScaler::OnlineScaler(ScalerKind kind) {
  if (kind == ScalerKind::standard) impl_ = StandardScaler{};
}

ScalerKind OnlineScaler::kind() const noexcept {
  return std::holds_alternative<RobustScaler>(impl_) ? ScalerKind::robust : ScalerKind::standard;
}

void OnlineScaler::update(double x) noexcept {
  std::visit([x](auto& s) { s.update(x); }, impl_);
}

double OnlineScaler::scale_update(double x) noexcept {
  return std::visit([x](auto& s) { return s.scale_update(x); }, impl_);
}

AffineMap OnlineScaler::snapshot() const noexcept {
  return std::visit([](const auto& s) { return s.snapshot(); }, impl_);
}

std::size_t OnlineScaler::count() const noexcept {
  return std::visit([](const auto& s) { return s.count(); }, impl_);
}

}  // namespace ltvstream
