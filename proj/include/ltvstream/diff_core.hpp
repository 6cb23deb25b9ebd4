#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ltvstream {

// Point in the unconstrained parameter space.
using ParamVector = std::vector<double>;

struct Evaluation {
  double log_density;
  ParamVector gradient;
};

// Unnormalized log-density with exact gradient, bound to whatever data the
// kernel captured. Kernels write the gradient into `grad` (same length as
// theta) and return log p. Kernels must be pure and safe to call concurrently.
class DensityGraph {
 public:
  using Kernel = std::function<double(std::span<const double> theta, std::span<double> grad)>;

  DensityGraph(std::size_t dimension, Kernel kernel);

  std::size_t dimension() const noexcept { return dimension_; }

  // Evaluates into a caller-owned gradient buffer. A non-finite log-density
  // (or any non-finite gradient entry) is reported as -inf: the point is
  // outside the region the sampler may visit.
  double evaluate_into(std::span<const double> theta, std::span<double> grad) const;

  Evaluation evaluate(std::span<const double> theta) const;

  // Same density plus a constant.
  DensityGraph shifted(double offset) const;

 private:
  std::size_t dimension_;
  Kernel kernel_;
};

Evaluation evaluate(const DensityGraph& graph, std::span<const double> theta);

struct GradientCheck {
  double max_rel_error = 0.0;
  std::size_t worst_coordinate = 0;
  std::vector<std::size_t> nonfinite_coordinates;

  bool passed(double tolerance) const { return nonfinite_coordinates.empty() && max_rel_error < tolerance; }
};

// Compares the analytic gradient against central differences with step h.
// Per-coordinate error is |analytic - fd| / max(|analytic|, |fd|, abs_floor).
GradientCheck check_gradient(const DensityGraph& graph, std::span<const double> theta, double h = 1e-5,
                             double abs_floor = 1e-8);

// Same comparison with five-point central differences over the steps
// max_step, max_step/4, ..., max_step/4^11, using the most self-consistent
// level. Stays accurate where |logp| is huge or the density has kinks near
// theta.
GradientCheck check_gradient_ladder(const DensityGraph& graph, std::span<const double> theta,
                                    double max_step = 0.1, double abs_floor = 1e-8);

}  // namespace ltvstream
