#include "ltvstream/diff_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace ltvstream {

DensityGraph::DensityGraph(std::size_t dimension, Kernel kernel)
    : dimension_(dimension), kernel_(std::move(kernel)) {
  if (dimension_ == 0) throw std::invalid_argument("density dimension must be positive");
  if (!kernel_) throw std::invalid_argument("density kernel is empty");
}

double DensityGraph::evaluate_into(std::span<const double> theta, std::span<double> grad) const {
  if (theta.size() != dimension_ || grad.size() != dimension_) {
    throw std::invalid_argument("parameter length " + std::to_string(theta.size()) +
                                " does not match density dimension " + std::to_string(dimension_));
  }
  const double logp = kernel_(theta, grad);
  if (!std::isfinite(logp)) return -std::numeric_limits<double>::infinity();
  for (double g : grad) {
    if (!std::isfinite(g)) return -std::numeric_limits<double>::infinity();
  }
  return logp;
}

Evaluation DensityGraph::evaluate(std::span<const double> theta) const {
  Evaluation out{0.0, ParamVector(dimension_, 0.0)};
  out.log_density = evaluate_into(theta, out.gradient);
  return out;
}

DensityGraph DensityGraph::shifted(double offset) const {
  Kernel inner = kernel_;
  return DensityGraph(dimension_, [inner, offset](std::span<const double> theta, std::span<double> grad) {
    return inner(theta, grad) + offset;
  });
}

Evaluation evaluate(const DensityGraph& graph, std::span<const double> theta) { return graph.evaluate(theta); }

namespace {

void score_coordinate(GradientCheck& result, std::size_t i, double analytic, double fd, double abs_floor) {
  if (!std::isfinite(fd) || !std::isfinite(analytic)) {
    result.nonfinite_coordinates.push_back(i);
    return;
  }
  const double scale = std::max({std::abs(analytic), std::abs(fd), abs_floor});
  const double err = std::abs(analytic - fd) / scale;
  if (err > result.max_rel_error) {
    result.max_rel_error = err;
    result.worst_coordinate = i;
  }
}

}  // namespace

GradientCheck check_gradient(const DensityGraph& graph, std::span<const double> theta, double h,
                             double abs_floor) {
  if (!(h > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  const std::size_t dim = graph.dimension();
  const Evaluation at = graph.evaluate(theta);
  ParamVector probe(theta.begin(), theta.end());
  ParamVector scratch(dim);
  GradientCheck result;
  for (std::size_t i = 0; i < dim; ++i) {
    const double original = probe[i];
    probe[i] = original + h;
    const double up = graph.evaluate_into(probe, scratch);
    probe[i] = original - h;
    const double down = graph.evaluate_into(probe, scratch);
    probe[i] = original;
    score_coordinate(result, i, at.gradient[i], (up - down) / (2.0 * h), abs_floor);
  }
  return result;
}

GradientCheck check_gradient_ladder(const DensityGraph& graph, std::span<const double> theta, double max_step,
                                    double abs_floor) {
  if (!(max_step > 0.0)) throw std::invalid_argument("finite-difference step must be positive");
  constexpr int kLevels = 12;
  constexpr double kShrink = 4.0;
  const std::size_t dim = graph.dimension();
  const Evaluation at = graph.evaluate(theta);
  ParamVector probe(theta.begin(), theta.end());
  ParamVector scratch(dim);
  GradientCheck result;
  std::array<double, kLevels> estimates{};
  for (std::size_t i = 0; i < dim; ++i) {
    const double original = probe[i];
    auto f = [&](double offset) {
      probe[i] = original + offset;
      const double v = graph.evaluate_into(probe, scratch);
      probe[i] = original;
      return v;
    };
    // Large steps lose to truncation and to kinks such as |x| at 0, small
    // ones to cancellation when |logp| is large; keep the level whose
    // neighbours agree best.
    double h = max_step;
    for (auto& d : estimates) {
      d = (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h);
      h /= kShrink;
    }
    double fd = std::numeric_limits<double>::quiet_NaN();
    double best_gap = std::numeric_limits<double>::infinity();
    for (int k = 1; k + 1 < kLevels; ++k) {
      const double gap = std::max(std::abs(estimates[k - 1] - estimates[k]), std::abs(estimates[k] - estimates[k + 1]));
      if (std::isfinite(gap) && gap < best_gap) {
        best_gap = gap;
        fd = estimates[k];
      }
    }
    score_coordinate(result, i, at.gradient[i], fd, abs_floor);
  }
  return result;
}

}  // namespace ltvstream
