#include "ltvstream/adaptation.hpp"

#include <algorithm>
#include <cmath>

namespace ltvstream {

void DualAveraging::restart(double step_size) {
  mu = std::log(10.0 * step_size);
  s_bar = 0.0;
  x_bar = 0.0;
  counter = 0.0;
}

double DualAveraging::learn(double accept_stat, double target) {
  counter += 1.0;
  accept_stat = std::min(1.0, accept_stat);
  const double eta = 1.0 / (counter + t0);
  s_bar = (1.0 - eta) * s_bar + eta * (target - accept_stat);
  const double x = mu - s_bar * std::sqrt(counter) / gamma;
  const double x_eta = std::pow(counter, -kappa);
  x_bar = (1.0 - x_eta) * x_bar + x_eta * x;
  return std::exp(x);
}

double DualAveraging::final_step_size() const { return std::exp(x_bar); }

void RunningVariance::reset(std::size_t dim) {
  count = 0;
  mean.assign(dim, 0.0);
  m2.assign(dim, 0.0);
}

void RunningVariance::add(std::span<const double> x) {
  ++count;
  const double n = static_cast<double>(count);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double delta = x[i] - mean[i];
    mean[i] += delta / n;
    m2[i] += delta * (x[i] - mean[i]);
  }
}

std::vector<double> RunningVariance::regularized_variance() const {
  std::vector<double> var(m2.size(), 1.0);
  if (count < 2) return var;
  const double n = static_cast<double>(count);
  for (std::size_t i = 0; i < var.size(); ++i) {
    const double sample_var = m2[i] / (n - 1.0);
    var[i] = (n / (n + 5.0)) * sample_var + 1e-3 * (5.0 / (n + 5.0));
  }
  return var;
}

WindowSchedule::WindowSchedule(std::size_t num_warmup, std::size_t init_buffer, std::size_t base_window,
                               std::size_t term_buffer)
    : num_warmup_(num_warmup),
      init_buffer_(init_buffer),
      term_buffer_(term_buffer),
      base_window_(base_window) {
  if (num_warmup < 20) {
    adapt_metric_ = false;
    return;
  }
  adapt_metric_ = true;
  if (init_buffer_ + base_window_ + term_buffer_ > num_warmup) {
    init_buffer_ = static_cast<std::size_t>(0.15 * static_cast<double>(num_warmup));
    term_buffer_ = static_cast<std::size_t>(0.1 * static_cast<double>(num_warmup));
    base_window_ = num_warmup - (init_buffer_ + term_buffer_);
  }
  window_size_ = base_window_;
  next_window_end_ = init_buffer_ + window_size_ - 1;
}

bool WindowSchedule::in_window(std::size_t step) const noexcept {
  return adapt_metric_ && step >= init_buffer_ && step < num_warmup_ - term_buffer_ && step != num_warmup_;
}

bool WindowSchedule::window_ends(std::size_t step) const noexcept {
  return adapt_metric_ && step == next_window_end_ && step != num_warmup_;
}

void WindowSchedule::next_window(std::size_t step) {
  const std::size_t last = num_warmup_ - term_buffer_ - 1;
  if (next_window_end_ == last) return;
  window_size_ *= 2;
  next_window_end_ = step + window_size_;
  if (next_window_end_ != last) {
    const std::size_t boundary = next_window_end_ + 2 * window_size_;
    if (boundary >= num_warmup_ - term_buffer_) next_window_end_ = last;
  }
}

}  // namespace ltvstream
