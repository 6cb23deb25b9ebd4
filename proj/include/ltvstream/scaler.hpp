#pragma once

#include <array>
#include <cstddef>
#include <string_view>
#include <variant>

namespace ltvstream {

inline constexpr double kSpreadFloor = 1e-12;

// x -> (x - center) / spread, frozen at one point of the stream.
struct AffineMap {
  double center = 0.0;
  double spread = 1.0;

  double scale(double x) const noexcept;
  // Exact inverse of scale() while spread > 0; returns center when spread == 0.
  double unscale(double z) const noexcept;
};

// Welford mean and population standard deviation.
class StandardScaler {
 public:
  void update(double x) noexcept;
  double scale(double x) const noexcept { return snapshot().scale(x); }
  double unscale(double z) const noexcept { return snapshot().unscale(z); }
  // Scales with the statistics seen so far, then folds x in.
  double scale_update(double x) noexcept;
  AffineMap snapshot() const noexcept;

  std::size_t count() const noexcept { return count_; }
  double mean() const noexcept { return mean_; }
  double stddev() const noexcept;

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

// P-square single-quantile estimator: five markers, O(1) memory. Exact
// (linearly interpolated) while fewer than five observations have been seen.
class P2Quantile {
 public:
  struct State {
    double p = 0.5;
    std::size_t count = 0;
    std::array<double, 5> heights{};
    std::array<double, 5> positions{};
    std::array<double, 5> desired{};
  };

  explicit P2Quantile(double p = 0.5);
  static P2Quantile from_state(const State& s);

  void add(double x) noexcept;
  double value() const noexcept;
  std::size_t count() const noexcept { return s_.count; }
  const State& state() const noexcept { return s_; }

 private:
  State s_;
};

// Median / interquartile-range scaling from streaming quantile estimates.
class RobustScaler {
 public:
  RobustScaler() : q1_(0.25), median_(0.5), q3_(0.75) {}
  RobustScaler(P2Quantile q1, P2Quantile median, P2Quantile q3) : q1_(q1), median_(median), q3_(q3) {}

  void update(double x) noexcept;
  double scale(double x) const noexcept { return snapshot().scale(x); }
  double unscale(double z) const noexcept { return snapshot().unscale(z); }
  double scale_update(double x) noexcept;
  AffineMap snapshot() const noexcept;

  std::size_t count() const noexcept { return median_.count(); }
  double median() const noexcept { return median_.value(); }
  double iqr() const noexcept;
  const P2Quantile& q1() const noexcept { return q1_; }
  const P2Quantile& q2() const noexcept { return median_; }
  const P2Quantile& q3() const noexcept { return q3_; }

 private:
  P2Quantile q1_;
  P2Quantile median_;
  P2Quantile q3_;
};

enum class ScalerKind { robust, standard };

ScalerKind parse_scaler_kind(std::string_view name);
std::string_view to_string(ScalerKind kind);

// Target scaler selected at run time.
class OnlineScaler {
 public:
  explicit OnlineScaler(ScalerKind kind = ScalerKind::robust);

  ScalerKind kind() const noexcept;
  void update(double x) noexcept;
  double scale_update(double x) noexcept;
  double scale(double x) const noexcept { return snapshot().scale(x); }
  double unscale(double z) const noexcept { return snapshot().unscale(z); }
  AffineMap snapshot() const noexcept;
  std::size_t count() const noexcept;

  const std::variant<RobustScaler, StandardScaler>& impl() const noexcept { return impl_; }

 private:
  std::variant<RobustScaler, StandardScaler> impl_;
};

}  // namespace ltvstream
