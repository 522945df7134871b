#ifndef REPLAB_DIFFUSION_HPP
#define REPLAB_DIFFUSION_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "replab/denoiser.hpp"
#include "replab/matrix.hpp"
#include "replab/rng.hpp"

namespace replab {

// beta_t noise schedule with cached cumulative products
// alpha_bar_t = prod_{s<=t} (1 - beta_s).
struct DiffusionSchedule {
  Vec beta;
  Vec alpha_bar;

  int steps() const { return static_cast<int>(beta.size()); }

  static DiffusionSchedule from_betas(Vec betas) {
    if (betas.empty()) throw std::invalid_argument("DiffusionSchedule: empty schedule");
    DiffusionSchedule s;
    s.beta = std::move(betas);
    s.alpha_bar.resize(s.beta.size());
    double prod = 1.0;
    for (std::size_t t = 0; t < s.beta.size(); ++t) {
      if (!(s.beta[t] > 0.0 && s.beta[t] < 1.0))
        throw std::invalid_argument("DiffusionSchedule: beta out of (0,1)");
      prod *= 1.0 - s.beta[t];
      s.alpha_bar[t] = prod;
    }
    return s;
  }

  // Linear ramp with endpoints rescaled by 1000/steps so total noise matches
  // the usual 1000-step defaults at shorter lengths. Endpoints are clamped
  // below 1 for very short schedules, where the rescale would leave (0,1).
  static DiffusionSchedule linear(int steps = 100) {
    if (steps < 2) throw std::invalid_argument("DiffusionSchedule::linear: steps must be >= 2");
    const double scale = 1000.0 / steps;
    const double lo = std::min(1e-4 * scale, 0.995);
    const double hi = std::min(0.02 * scale, 0.995);
    Vec betas(steps);
    for (int t = 0; t < steps; ++t)
      betas[t] = lo + (hi - lo) * static_cast<double>(t) / (steps - 1);
    return from_betas(std::move(betas));
  }
};

struct NoisedSample {
  Vec z_t;
  int t = 0;
  Vec eps;  // the Gaussian noise actually drawn, kept as the loss target
};

struct sampling_error : std::runtime_error {
  int step;
  explicit sampling_error(int t)
      : std::runtime_error("sampling produced a non-finite value at step " + std::to_string(t)),
        step(t) {}
};

// One forward kernel application: sqrt(1-beta)*z + sqrt(beta)*xi.
inline Vec diffuse_step(const Vec& z_prev, double beta, const Vec& xi) {
  Vec z(z_prev.size());
  const double a = std::sqrt(1.0 - beta);
  const double b = std::sqrt(beta);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = a * z_prev[i] + b * xi[i];
  return z;
}

inline Vec forward_step(const DiffusionSchedule& sched, const Vec& z_prev, int t, Rng& rng) {
  if (t < 0 || t >= sched.steps()) throw std::invalid_argument("forward_step: t out of range");
  return diffuse_step(z_prev, sched.beta[t], rng.normal_vec(z_prev.size()));
}

// Closed-form marginal: z_t = sqrt(abar)*z0 + sqrt(1-abar)*eps.
inline NoisedSample noised_marginal(const Vec& z0, int t, double alpha_bar, Vec eps) {
  NoisedSample s;
  s.t = t;
  s.eps = std::move(eps);
  s.z_t.resize(z0.size());
  const double a = std::sqrt(alpha_bar);
  const double b = std::sqrt(1.0 - alpha_bar);
  for (std::size_t i = 0; i < z0.size(); ++i) s.z_t[i] = a * z0[i] + b * s.eps[i];
  return s;
}

inline NoisedSample forward_marginal(const DiffusionSchedule& sched, const Vec& z0, int t,
                                     Rng& rng) {
  if (t < 0 || t >= sched.steps()) throw std::invalid_argument("forward_marginal: t out of range");
  return noised_marginal(z0, t, sched.alpha_bar[t], rng.normal_vec(z0.size()));
}

// Noise-prediction error averaged over the latent dimension.
inline double noise_mse(const Vec& eps_hat, const Vec& eps) {
  if (eps_hat.size() != eps.size()) throw std::invalid_argument("noise_mse: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double d = eps_hat[i] - eps[i];
    s += d * d;
  }
  return s / static_cast<double>(eps.size());
}

// Draws a uniform timestep, noises z0 and scores the net's prediction.
inline double denoise_loss(const DenoiserNet& net, const DiffusionSchedule& sched, const Vec& z0,
                           const Vec& cond, Rng& rng) {
  const int t = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(sched.steps())));
  const NoisedSample s = forward_marginal(sched, z0, t, rng);
  return noise_mse(net.forward(s.z_t, s.t, cond), s.eps);
}

// Same draw as denoise_loss but also accumulates grad_weight * dLoss/dParams.
inline double denoise_loss_grad(const DenoiserNet& net, const DiffusionSchedule& sched,
                                const Vec& z0, const Vec& cond, Rng& rng, double grad_weight,
                                DenoiserGrads& grads) {
  const int t = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(sched.steps())));
  const NoisedSample s = forward_marginal(sched, z0, t, rng);
  DenoiserNet::Trace trace;
  const Vec eps_hat = net.forward_trace(s.z_t, s.t, cond, trace);
  const double inv_dim = 1.0 / static_cast<double>(eps_hat.size());
  Vec d_out(eps_hat.size());
  for (std::size_t i = 0; i < eps_hat.size(); ++i)
    d_out[i] = grad_weight * 2.0 * (eps_hat[i] - s.eps[i]) * inv_dim;
  net.backward(trace, d_out, grads);
  return noise_mse(eps_hat, s.eps);
}

// Ancestral sampling from pure noise down to t = 0. Reverse variance is
// fixed to beta_t; no noise is injected on the final step.
inline Vec sample(const DenoiserNet& net, const DiffusionSchedule& sched, const Vec& cond,
                  Rng& rng) {
  const int dim = net.config().latent_dim;
  Vec z = rng.normal_vec(dim);
  for (int t = sched.steps() - 1; t >= 0; --t) {
    const Vec eps_hat = net.forward(z, t, cond);
    const double beta = sched.beta[t];
    const double coef = beta / std::sqrt(1.0 - sched.alpha_bar[t]);
    const double inv_sqrt_alpha = 1.0 / std::sqrt(1.0 - beta);
    for (int i = 0; i < dim; ++i) z[i] = inv_sqrt_alpha * (z[i] - coef * eps_hat[i]);
    if (t > 0) {
      const double sigma = std::sqrt(beta);
      for (int i = 0; i < dim; ++i) z[i] += sigma * rng.normal();
    }
    if (!all_finite(z)) throw sampling_error(t);
  }
  return z;
}

}  // namespace replab

#endif  // REPLAB_DIFFUSION_HPP
