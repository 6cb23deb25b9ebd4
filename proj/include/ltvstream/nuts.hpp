#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "ltvstream/adaptation.hpp"
#include "ltvstream/diff_core.hpp"
#include "ltvstream/rng.hpp"

namespace ltvstream {

inline constexpr std::size_t kDefaultBatchSize = 3000;

struct SamplerConfig {
  std::size_t num_samples = 500;
  std::size_t num_warmup = 1500;
  // Warmup performed on every batch after the first, starting from the
  // carried state. See extra_warmup_rule_of_thumb() for the alternative.
  std::size_t extra_warmup = 500;
  int max_tree_depth = 10;
  double target_accept = 0.8;
  double step_size_init = 1.0;
  // Energy error above which a trajectory is declared divergent.
  double max_energy_error = 1000.0;

  void validate() const;
};

// Three times the number of draws: the looser rule of thumb for sizing the
// per-batch extra warmup. Never applied implicitly.
inline std::size_t extra_warmup_rule_of_thumb(std::size_t num_samples) { return 3 * num_samples; }

struct AdaptationState {
  DualAveraging step;
  RunningVariance variance;
  std::size_t adapted_steps = 0;  // lifetime count of warmup transitions
};

// Everything carried from one batch to the next.
struct SamplerState {
  ParamVector position;
  double step_size = 1.0;
  ParamVector inverse_mass_diag;
  AdaptationState adaptation;
  Rng rng;
  std::size_t divergence_count = 0;  // lifetime, warmup and sampling

  std::size_t dimension() const noexcept { return position.size(); }
  // Bytes held by the state; independent of how much data has been seen.
  std::size_t footprint_bytes() const noexcept;
};

SamplerState initial_state(ParamVector position, const SamplerConfig& config, std::uint64_t seed);

struct TransitionInfo {
  double accept_stat = 0.0;
  int tree_depth = 0;
  int leapfrog_steps = 0;
  bool divergent = false;
  double energy = 0.0;
  double log_density = 0.0;
};

// Draws stored row-major, one row per draw.
struct SampleChain {
  std::size_t dimension = 0;
  std::vector<double> draws;
  std::vector<double> accept_stats;
  std::vector<int> tree_depths;
  std::vector<int> leapfrog_steps;
  std::vector<double> log_densities;
  std::size_t divergences = 0;

  std::size_t size() const noexcept { return dimension ? draws.size() / dimension : 0; }
  std::span<const double> draw(std::size_t i) const { return {draws.data() + i * dimension, dimension}; }
  std::vector<double> column(std::size_t coordinate) const;
  double mean_accept() const;
  std::size_t footprint_bytes() const noexcept;
};

// One NUTS transition from state.position with the state's step size and
// metric: multinomial sampling across a doubling trajectory, stopped by the
// generalized no-U-turn criterion or max_tree_depth. Advances state.rng and
// state.position; adaptation is untouched.
TransitionInfo nuts_transition(const DensityGraph& graph, const SamplerConfig& config, SamplerState& state);

// Doubles or halves the step size until a single leapfrog step from the
// current position crosses an acceptance of 0.8.
void find_reasonable_step_size(const DensityGraph& graph, SamplerState& state);

struct WarmupReport {
  std::vector<double> accept_stats;
  std::size_t divergences = 0;
  std::size_t metric_updates = 0;
};

// Adapts step size (dual averaging) and the diagonal metric (windowed
// variance) over `steps` transitions, starting from `state`. Dual averaging
// restarts around the incoming step size and the variance accumulator starts
// empty; the incoming metric stays in use until the first window closes.
// Throws SamplerError if more than half the steps diverge.
SamplerState warmup(const DensityGraph& graph, const SamplerConfig& config, SamplerState state, std::size_t steps,
                    WarmupReport* report = nullptr);

struct SampleResult {
  SampleChain chain;
  SamplerState state;
};

// config.num_samples transitions with adaptation frozen.
SampleResult sample(const DensityGraph& graph, const SamplerConfig& config, SamplerState state);

struct BatchDiagnostics {
  std::size_t batch_index = 0;  // 1-based
  std::size_t warmup_steps = 0;
  std::size_t warmup_divergences = 0;
  std::size_t sample_divergences = 0;
  double step_size = 0.0;
  double mean_accept = 0.0;
  double mean_tree_depth = 0.0;
  int max_tree_depth_seen = 0;
  double mean_leapfrog_steps = 0.0;
};

struct BatchFit {
  SampleChain chain;
  BatchDiagnostics diagnostics;
};

// Mini-batch driver. The first fit runs the full warmup; every later fit runs
// config.extra_warmup steps from the carried state, then draws. The state
// after drawing is carried to the next batch.
class OnlineSampler {
 public:
  OnlineSampler(SamplerConfig config, ParamVector initial_position, std::uint64_t seed);

  BatchFit fit(const DensityGraph& graph);

  const SamplerConfig& config() const noexcept { return config_; }
  const SamplerState& state() const noexcept { return state_; }
  std::size_t batches_fit() const noexcept { return batches_fit_; }

 private:
  SamplerConfig config_;
  SamplerState state_;
  std::size_t batches_fit_ = 0;
};

template <class Batch>
struct OnlineHooks {
  // Binds a batch to a density over the model parameters.
  std::function<DensityGraph(const Batch&)> bind;
  // Called once per batch with the chain that should score it. For batch 1
  // this is its own fit (in_sample = true). For batch j >= 2 it is the chain
  // fit on batch j-1, and the call happens before batch j is seen by the
  // sampler.
  std::function<void(std::size_t batch_index, const Batch&, const SampleChain&, bool in_sample)> predict;
  // Called after each batch is fit.
  std::function<void(const Batch&, const BatchFit&, const SamplerState&)> fitted;
};

// Runs the mini-batch workflow over a pull-based stream. `next` returns
// std::nullopt when the stream ends. Only the current batch and the carried
// chain/state are alive at any time. Returns the number of batches processed.
template <class Batch>
std::size_t run_online(const std::function<std::optional<Batch>()>& next, OnlineSampler& sampler,
                       const OnlineHooks<Batch>& hooks) {
  std::size_t index = 0;
  std::optional<SampleChain> carried;
  while (std::optional<Batch> batch = next()) {
    ++index;
    if (carried && hooks.predict) hooks.predict(index, *batch, *carried, false);
    const DensityGraph graph = hooks.bind(*batch);
    BatchFit fit = sampler.fit(graph);
    fit.diagnostics.batch_index = index;
    if (!carried && hooks.predict) hooks.predict(index, *batch, fit.chain, true);
    if (hooks.fitted) hooks.fitted(*batch, fit, sampler.state());
    carried = std::move(fit.chain);
  }
  return index;
}

// Effective sample size of a scalar chain (Geyer initial monotone sequence).
double effective_sample_size(std::span<const double> chain);

}  // namespace ltvstream
