#include "ltvstream/nuts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ltvstream/errors.hpp"

namespace ltvstream {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

struct PhasePoint {
  ParamVector q;
  ParamVector p;
  ParamVector grad;
  double logp = 0.0;
};

// Leapfrog integrator and trajectory bookkeeping for one transition.
class Trajectory {
 public:
  Trajectory(const DensityGraph& graph, const SamplerConfig& config, const ParamVector& inv_mass, double step_size,
             Rng& rng)
      : graph_(graph), config_(config), inv_mass_(inv_mass), step_size_(step_size), rng_(rng) {}

  double hamiltonian(const PhasePoint& z) const {
    if (z.logp == kNegInf) return std::numeric_limits<double>::infinity();
    double kinetic = 0.0;
    for (std::size_t i = 0; i < z.p.size(); ++i) kinetic += z.p[i] * z.p[i] * inv_mass_[i];
    return -z.logp + 0.5 * kinetic;
  }

  void p_sharp(const PhasePoint& z, ParamVector& out) const {
    out.resize(z.p.size());
    for (std::size_t i = 0; i < z.p.size(); ++i) out[i] = inv_mass_[i] * z.p[i];
  }

  void leapfrog(PhasePoint& z, double eps) const {
    const std::size_t n = z.q.size();
    for (std::size_t i = 0; i < n; ++i) z.p[i] += 0.5 * eps * z.grad[i];
    for (std::size_t i = 0; i < n; ++i) z.q[i] += eps * inv_mass_[i] * z.p[i];
    z.logp = graph_.evaluate_into(z.q, z.grad);
    if (z.logp == kNegInf) return;
    for (std::size_t i = 0; i < n; ++i) z.p[i] += 0.5 * eps * z.grad[i];
  }

  static bool no_u_turn(const ParamVector& p_sharp_minus, const ParamVector& p_sharp_plus, const ParamVector& rho) {
    double plus = 0.0, minus = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
      plus += p_sharp_plus[i] * rho[i];
      minus += p_sharp_minus[i] * rho[i];
    }
    return plus > 0.0 && minus > 0.0;
  }

  // Recursively builds a subtree of 2^depth leapfrog steps from `z` in
  // direction `sign`, multinomially sampling `z_propose` from it. Returns
  // false when the subtree diverged or contains a U-turn.
  bool build_tree(int depth, PhasePoint& z, PhasePoint& z_propose, ParamVector& p_sharp_beg,
                  ParamVector& p_sharp_end, ParamVector& rho, ParamVector& p_beg, ParamVector& p_end, double h0,
                  double sign, double& log_sum_weight) {
    const std::size_t n = z.q.size();
    if (depth == 0) {
      leapfrog(z, sign * step_size_);
      ++leapfrog_steps;
      double h = hamiltonian(z);
      if (std::isnan(h)) h = std::numeric_limits<double>::infinity();
      if (h - h0 > config_.max_energy_error) divergent = true;
      log_sum_weight = log_sum_exp(log_sum_weight, h0 - h);
      sum_metro_prob += (h0 - h > 0.0) ? 1.0 : std::exp(h0 - h);
      z_propose = z;
      p_sharp(z, p_sharp_beg);
      p_sharp_end = p_sharp_beg;
      for (std::size_t i = 0; i < n; ++i) rho[i] += z.p[i];
      p_beg = z.p;
      p_end = p_beg;
      return !divergent;
    }

    ParamVector p_init_end(n, 0.0), p_sharp_init_end(n, 0.0), rho_init(n, 0.0);
    double log_sum_weight_init = kNegInf;
    if (!build_tree(depth - 1, z, z_propose, p_sharp_beg, p_sharp_init_end, rho_init, p_beg, p_init_end, h0, sign,
                    log_sum_weight_init)) {
      return false;
    }

    PhasePoint z_propose_final = z;
    ParamVector p_final_beg(n, 0.0), p_sharp_final_beg(n, 0.0), rho_final(n, 0.0);
    double log_sum_weight_final = kNegInf;
    if (!build_tree(depth - 1, z, z_propose_final, p_sharp_final_beg, p_sharp_end, rho_final, p_final_beg, p_end, h0,
                    sign, log_sum_weight_final)) {
      return false;
    }

    const double log_sum_weight_subtree = log_sum_exp(log_sum_weight_init, log_sum_weight_final);
    log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);
    if (log_sum_weight_final > log_sum_weight_subtree) {
      z_propose = z_propose_final;
    } else if (rng_.uniform() < std::exp(log_sum_weight_final - log_sum_weight_subtree)) {
      z_propose = z_propose_final;
    }

    ParamVector rho_subtree(n);
    for (std::size_t i = 0; i < n; ++i) rho_subtree[i] = rho_init[i] + rho_final[i];
    for (std::size_t i = 0; i < n; ++i) rho[i] += rho_subtree[i];

    bool persist = no_u_turn(p_sharp_beg, p_sharp_end, rho_subtree);
    ParamVector rho_extended(n);
    for (std::size_t i = 0; i < n; ++i) rho_extended[i] = rho_init[i] + p_final_beg[i];
    persist = persist && no_u_turn(p_sharp_beg, p_sharp_final_beg, rho_extended);
    for (std::size_t i = 0; i < n; ++i) rho_extended[i] = rho_final[i] + p_init_end[i];
    persist = persist && no_u_turn(p_sharp_init_end, p_sharp_end, rho_extended);
    return persist;
  }

  int leapfrog_steps = 0;
  double sum_metro_prob = 0.0;
  bool divergent = false;

 private:
  const DensityGraph& graph_;
  const SamplerConfig& config_;
  const ParamVector& inv_mass_;
  double step_size_;
  Rng& rng_;
};

PhasePoint start_point(const DensityGraph& graph, const SamplerState& state) {
  PhasePoint z;
  z.q = state.position;
  z.grad.assign(z.q.size(), 0.0);
  z.logp = graph.evaluate_into(z.q, z.grad);
  z.p.assign(z.q.size(), 0.0);
  return z;
}

void sample_momentum(PhasePoint& z, const ParamVector& inv_mass, Rng& rng) {
  for (std::size_t i = 0; i < z.p.size(); ++i) z.p[i] = rng.normal() / std::sqrt(inv_mass[i]);
}

}  // namespace

void SamplerConfig::validate() const {
  if (num_samples == 0) throw ConfigError("num_samples", "must be positive");
  if (max_tree_depth < 1) throw ConfigError("max_tree_depth", "must be positive");
  if (!(target_accept > 0.0 && target_accept < 1.0)) throw ConfigError("target_accept", "must lie in (0, 1)");
  if (!(step_size_init > 0.0)) throw ConfigError("step_size_init", "must be positive");
  if (!(max_energy_error > 0.0)) throw ConfigError("max_energy_error", "must be positive");
}

std::size_t SamplerState::footprint_bytes() const noexcept {
  const std::size_t doubles = position.size() + inverse_mass_diag.size() + adaptation.variance.mean.size() +
                              adaptation.variance.m2.size();
  return sizeof(SamplerState) + doubles * sizeof(double);
}

SamplerState initial_state(ParamVector position, const SamplerConfig& config, std::uint64_t seed) {
  if (position.empty()) throw ConfigError("position", "initial position is empty");
  SamplerState state;
  state.step_size = config.step_size_init;
  state.inverse_mass_diag.assign(position.size(), 1.0);
  state.position = std::move(position);
  state.rng = Rng(seed);
  state.adaptation.variance.reset(state.position.size());
  return state;
}

std::vector<double> SampleChain::column(std::size_t coordinate) const {
  std::vector<double> out(size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = draws[i * dimension + coordinate];
  return out;
}

double SampleChain::mean_accept() const {
  if (accept_stats.empty()) return 0.0;
  return std::accumulate(accept_stats.begin(), accept_stats.end(), 0.0) / static_cast<double>(accept_stats.size());
}

std::size_t SampleChain::footprint_bytes() const noexcept {
  return sizeof(SampleChain) + draws.size() * sizeof(double) + accept_stats.size() * sizeof(double) +
         log_densities.size() * sizeof(double) + (tree_depths.size() + leapfrog_steps.size()) * sizeof(int);
}

TransitionInfo nuts_transition(const DensityGraph& graph, const SamplerConfig& config, SamplerState& state) {
  if (state.position.size() != graph.dimension()) {
    throw SamplerError("sampler state dimension " + std::to_string(state.position.size()) +
                       " does not match density dimension " + std::to_string(graph.dimension()));
  }
  const std::size_t n = state.position.size();
  PhasePoint z = start_point(graph, state);
  if (z.logp == kNegInf) {
    throw SamplerError("log density is not finite at the current sampler position");
  }
  sample_momentum(z, state.inverse_mass_diag, state.rng);

  Trajectory traj(graph, config, state.inverse_mass_diag, state.step_size, state.rng);
  const double h0 = traj.hamiltonian(z);

  PhasePoint z_fwd = z, z_bwd = z, z_sample = z, z_propose = z;
  ParamVector p_sharp_fwd_bwd, p_sharp_fwd_fwd, p_sharp_bwd_fwd, p_sharp_bwd_bwd;
  traj.p_sharp(z, p_sharp_fwd_bwd);
  p_sharp_fwd_fwd = p_sharp_fwd_bwd;
  p_sharp_bwd_fwd = p_sharp_fwd_bwd;
  p_sharp_bwd_bwd = p_sharp_fwd_bwd;
  ParamVector p_fwd_fwd = z.p, p_fwd_bwd = z.p, p_bwd_fwd = z.p, p_bwd_bwd = z.p;
  ParamVector rho = z.p;
  double log_sum_weight = 0.0;
  int depth = 0;

  while (depth < config.max_tree_depth) {
    ParamVector rho_fwd(n, 0.0), rho_bwd(n, 0.0);
    bool valid_subtree;
    double log_sum_weight_subtree = kNegInf;

    if (state.rng.uniform() > 0.5) {
      rho_bwd = rho;
      p_bwd_fwd = p_fwd_bwd;
      p_sharp_bwd_fwd = p_sharp_fwd_bwd;
      PhasePoint walker = z_fwd;
      valid_subtree = traj.build_tree(depth, walker, z_propose, p_sharp_fwd_bwd, p_sharp_fwd_fwd, rho_fwd, p_fwd_bwd,
                                      p_fwd_fwd, h0, 1.0, log_sum_weight_subtree);
      z_fwd = std::move(walker);
    } else {
      rho_fwd = rho;
      p_fwd_bwd = p_bwd_fwd;
      p_sharp_fwd_bwd = p_sharp_bwd_fwd;
      PhasePoint walker = z_bwd;
      valid_subtree = traj.build_tree(depth, walker, z_propose, p_sharp_bwd_fwd, p_sharp_bwd_bwd, rho_bwd, p_bwd_fwd,
                                      p_bwd_bwd, h0, -1.0, log_sum_weight_subtree);
      z_bwd = std::move(walker);
    }

    if (!valid_subtree) break;
    ++depth;

    if (log_sum_weight_subtree > log_sum_weight) {
      z_sample = z_propose;
    } else if (state.rng.uniform() < std::exp(log_sum_weight_subtree - log_sum_weight)) {
      z_sample = z_propose;
    }
    log_sum_weight = log_sum_exp(log_sum_weight, log_sum_weight_subtree);

    for (std::size_t i = 0; i < n; ++i) rho[i] = rho_bwd[i] + rho_fwd[i];
    bool persist = Trajectory::no_u_turn(p_sharp_bwd_bwd, p_sharp_fwd_fwd, rho);
    ParamVector rho_extended(n);
    for (std::size_t i = 0; i < n; ++i) rho_extended[i] = rho_bwd[i] + p_fwd_bwd[i];
    persist = persist && Trajectory::no_u_turn(p_sharp_bwd_bwd, p_sharp_fwd_bwd, rho_extended);
    for (std::size_t i = 0; i < n; ++i) rho_extended[i] = rho_fwd[i] + p_bwd_fwd[i];
    persist = persist && Trajectory::no_u_turn(p_sharp_bwd_fwd, p_sharp_fwd_fwd, rho_extended);
    if (!persist) break;
  }

  TransitionInfo info;
  info.tree_depth = depth;
  info.leapfrog_steps = traj.leapfrog_steps;
  info.divergent = traj.divergent;
  info.accept_stat = traj.leapfrog_steps ? traj.sum_metro_prob / traj.leapfrog_steps : 0.0;
  info.energy = traj.hamiltonian(z_sample);
  info.log_density = z_sample.logp;
  state.position = std::move(z_sample.q);
  if (info.divergent) ++state.divergence_count;
  return info;
}

void find_reasonable_step_size(const DensityGraph& graph, SamplerState& state) {
  constexpr double kLogTarget = -0.22314355131420976;  // log(0.8)
  constexpr int kMaxIterations = 200;
  PhasePoint z0 = start_point(graph, state);
  if (z0.logp == kNegInf) throw SamplerError("log density is not finite at the current sampler position");

  SamplerConfig probe_config;
  auto delta_h = [&](double eps) {
    PhasePoint z = z0;
    sample_momentum(z, state.inverse_mass_diag, state.rng);
    Trajectory traj(graph, probe_config, state.inverse_mass_diag, eps, state.rng);
    const double h0 = traj.hamiltonian(z);
    traj.leapfrog(z, eps);
    double h = traj.hamiltonian(z);
    if (std::isnan(h)) h = std::numeric_limits<double>::infinity();
    return h0 - h;
  };

  double eps = state.step_size;
  const int direction = delta_h(eps) > kLogTarget ? 1 : -1;
  for (int it = 0; it < kMaxIterations; ++it) {
    const double dh = delta_h(eps);
    if (direction == 1 && !(dh > kLogTarget)) break;
    if (direction == -1 && !(dh < kLogTarget)) break;
    const double next = direction == 1 ? 2.0 * eps : 0.5 * eps;
    if (next > 1e7 || next < 1e-12) break;
    eps = next;
  }
  state.step_size = eps;
}

SamplerState warmup(const DensityGraph& graph, const SamplerConfig& config, SamplerState state, std::size_t steps,
                    WarmupReport* report) {
  if (steps == 0) return state;
  config.validate();
  const std::size_t dim = graph.dimension();
  if (state.dimension() != dim) {
    throw SamplerError("sampler state dimension " + std::to_string(state.dimension()) +
                       " does not match density dimension " + std::to_string(dim));
  }
  if (state.inverse_mass_diag.size() != dim) state.inverse_mass_diag.assign(dim, 1.0);

  find_reasonable_step_size(graph, state);
  state.adaptation.step.restart(state.step_size);
  state.adaptation.variance.reset(dim);
  WindowSchedule schedule(steps);

  std::size_t divergences = 0;
  for (std::size_t step = 0; step < steps; ++step) {
    const TransitionInfo info = nuts_transition(graph, config, state);
    if (info.divergent) ++divergences;
    if (report) report->accept_stats.push_back(info.accept_stat);
    state.step_size = state.adaptation.step.learn(info.accept_stat, config.target_accept);

    if (schedule.in_window(step)) state.adaptation.variance.add(state.position);
    if (schedule.window_ends(step)) {
      schedule.next_window(step);
      state.inverse_mass_diag = state.adaptation.variance.regularized_variance();
      state.adaptation.variance.reset(dim);
      find_reasonable_step_size(graph, state);
      state.adaptation.step.restart(state.step_size);
      if (report) ++report->metric_updates;
    }
    ++state.adaptation.adapted_steps;
  }
  state.step_size = state.adaptation.step.final_step_size();
  if (report) report->divergences += divergences;
  if (2 * divergences > steps) {
    throw SamplerError("warmup diverged on " + std::to_string(divergences) + " of " + std::to_string(steps) +
                           " steps",
                       divergences);
  }
  return state;
}

SampleResult sample(const DensityGraph& graph, const SamplerConfig& config, SamplerState state) {
  config.validate();
  SampleResult out;
  SampleChain& chain = out.chain;
  chain.dimension = graph.dimension();
  chain.draws.reserve(config.num_samples * chain.dimension);
  chain.accept_stats.reserve(config.num_samples);
  chain.tree_depths.reserve(config.num_samples);
  chain.leapfrog_steps.reserve(config.num_samples);
  chain.log_densities.reserve(config.num_samples);
  for (std::size_t i = 0; i < config.num_samples; ++i) {
    const TransitionInfo info = nuts_transition(graph, config, state);
    chain.draws.insert(chain.draws.end(), state.position.begin(), state.position.end());
    chain.accept_stats.push_back(info.accept_stat);
    chain.tree_depths.push_back(info.tree_depth);
    chain.leapfrog_steps.push_back(info.leapfrog_steps);
    chain.log_densities.push_back(info.log_density);
    if (info.divergent) ++chain.divergences;
  }
  out.state = std::move(state);
  return out;
}

OnlineSampler::OnlineSampler(SamplerConfig config, ParamVector initial_position, std::uint64_t seed)
    : config_(config), state_(initial_state(std::move(initial_position), config, seed)) {
  config_.validate();
}

BatchFit OnlineSampler::fit(const DensityGraph& graph) {
  const std::size_t steps = batches_fit_ == 0 ? config_.num_warmup : config_.extra_warmup;
  WarmupReport report;
  state_ = warmup(graph, config_, std::move(state_), steps, &report);
  SampleResult result = sample(graph, config_, std::move(state_));
  state_ = std::move(result.state);
  ++batches_fit_;

  BatchFit fit;
  fit.chain = std::move(result.chain);
  BatchDiagnostics& d = fit.diagnostics;
  d.batch_index = batches_fit_;
  d.warmup_steps = steps;
  d.warmup_divergences = report.divergences;
  d.sample_divergences = fit.chain.divergences;
  d.step_size = state_.step_size;
  d.mean_accept = fit.chain.mean_accept();
  const auto& depths = fit.chain.tree_depths;
  const auto& leaps = fit.chain.leapfrog_steps;
  if (!depths.empty()) {
    d.mean_tree_depth = std::accumulate(depths.begin(), depths.end(), 0.0) / static_cast<double>(depths.size());
    d.max_tree_depth_seen = *std::max_element(depths.begin(), depths.end());
    d.mean_leapfrog_steps = std::accumulate(leaps.begin(), leaps.end(), 0.0) / static_cast<double>(leaps.size());
  }
  return fit;
}

double effective_sample_size(std::span<const double> chain) {
  const std::size_t n = chain.size();
  if (n < 4) return static_cast<double>(n);
  const double mean = std::accumulate(chain.begin(), chain.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double x : chain) var += (x - mean) * (x - mean);
  var /= static_cast<double>(n);
  if (var <= 0.0) return static_cast<double>(n);

  auto autocorr = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) acc += (chain[i] - mean) * (chain[i + lag] - mean);
    return acc / (static_cast<double>(n) * var);
  };

  // Sum of consecutive autocorrelation pairs while positive and monotone.
  double sum_pairs = 0.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t lag = 0; lag + 1 < n; lag += 2) {
    double pair = autocorr(lag) + autocorr(lag + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    sum_pairs += pair;
    prev_pair = pair;
  }
  const double tau = std::max(-1.0 + 2.0 * sum_pairs, 1.0 / std::log10(static_cast<double>(n)));
  return static_cast<double>(n) / tau;
}

}  // namespace ltvstream
