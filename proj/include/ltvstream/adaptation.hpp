#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ltvstream {

// Nesterov dual averaging of log step size toward a target acceptance rate.
struct DualAveraging {
  double gamma = 0.05;
  double t0 = 10.0;
  double kappa = 0.75;

  double mu = 0.0;  // shrinkage point, log(10 * eps0)
  double s_bar = 0.0;
  double x_bar = 0.0;
  double counter = 0.0;

  void restart(double step_size);
  // Returns the next step size to try.
  double learn(double accept_stat, double target);
  double final_step_size() const;
};

// Welford accumulator for per-coordinate variance.
struct RunningVariance {
  std::size_t count = 0;
  std::vector<double> mean;
  std::vector<double> m2;

  void reset(std::size_t dim);
  void add(std::span<const double> x);
  // Sample variance shrunk toward 1e-3 with weight 5 / (n + 5).
  std::vector<double> regularized_variance() const;
};

// Expanding-window schedule over a warmup of `num_warmup` steps: a fast
// initial buffer (step size only), slow windows doubling from `base_window`
// in which the metric is estimated, and a terminal buffer (step size only).
// Defaults 75 / 25 / 50; rescaled to 15% / 75% / 10% when the warmup is too
// short. Warmups under 20 steps adapt step size only.
class WindowSchedule {
 public:
  WindowSchedule() = default;
  explicit WindowSchedule(std::size_t num_warmup, std::size_t init_buffer = 75, std::size_t base_window = 25,
                          std::size_t term_buffer = 50);

  bool adapts_metric() const noexcept { return adapt_metric_; }
  bool in_window(std::size_t step) const noexcept;
  bool window_ends(std::size_t step) const noexcept;
  // Advances past a finished window.
  void next_window(std::size_t step);

  std::size_t init_buffer() const noexcept { return init_buffer_; }
  std::size_t term_buffer() const noexcept { return term_buffer_; }
  std::size_t base_window() const noexcept { return base_window_; }

 private:
  std::size_t num_warmup_ = 0;
  std::size_t init_buffer_ = 0;
  std::size_t term_buffer_ = 0;
  std::size_t base_window_ = 0;
  std::size_t window_size_ = 0;
  std::size_t next_window_end_ = 0;
  bool adapt_metric_ = false;
};

}  // namespace ltvstream
