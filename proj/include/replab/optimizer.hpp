#ifndef REPLAB_OPTIMIZER_HPP
#define REPLAB_OPTIMIZER_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "replab/denoiser.hpp"

namespace replab {

struct AdamWConfig {
  double lr = 1e-4;
  double weight_decay = 1e-2;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

enum class StepStatus { ok, non_finite_grad };

// Linear learning-rate ramp: step/warmup_steps capped at 1.
inline double warmup_scale(long step, long warmup_steps) {
  if (warmup_steps <= 0) return 1.0;
  if (step >= warmup_steps) return 1.0;
  return static_cast<double>(step) / static_cast<double>(warmup_steps);
}

// Rescale so the global L2 norm does not exceed max_norm; direction
// preserved. The small slack on the comparison makes repeated clipping a
// fixed point (a re-clip of an already-clipped gradient is a no-op even
// though the scaled norm lands within a few ulps of the bound).
inline double clip_grad_norm(DenoiserGrads& grads, double max_norm = 1.0) {
  const double n = std::sqrt(grads.squared_norm());
  if (n <= max_norm * (1.0 + 1e-12)) return n;
  grads.scale(max_norm / n);
  return n;
}

// AdamW with decoupled weight decay:
//   m = b1*m + (1-b1)*g
//   v = b2*v + (1-b2)*g^2
//   p -= lr_scale*lr*( mhat/(sqrt(vhat)+eps) + wd*p )
// lr_scale in [0,1] carries the warm-up ramp and scales the decay term too.
class AdamW {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {
    if (cfg.lr <= 0.0) throw std::invalid_argument("AdamW: lr must be > 0");
    if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0) throw std::invalid_argument("AdamW: beta1 out of range");
    if (cfg.beta2 < 0.0 || cfg.beta2 >= 1.0) throw std::invalid_argument("AdamW: beta2 out of range");
  }

  const AdamWConfig& config() const { return cfg_; }
  long steps_taken() const { return step_; }

  StepStatus step(DenoiserNet& net, const DenoiserGrads& grads, double lr_scale) {
    const std::size_t n = net.param_count();
    if (grads.param_count() != n) throw std::invalid_argument("AdamW: gradient shape mismatch");
    if (!grads.finite()) return StepStatus::non_finite_grad;
    if (m_.size() != n) {
      m_.assign(n, 0.0);
      v_.assign(n, 0.0);
    }
    ++step_;
    const double b1 = cfg_.beta1;
    const double b2 = cfg_.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    const double lr = lr_scale * cfg_.lr;
    for (std::size_t i = 0; i < n; ++i) {
      const double g = grads.get_flat(i);
      m_[i] = b1 * m_[i] + (1.0 - b1) * g;
      v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
      const double mhat = m_[i] / bc1;
      const double vhat = v_[i] / bc2;
      const double p = net.get_param(i);
      net.set_param(i, p - lr * (mhat / (std::sqrt(vhat) + cfg_.eps) + cfg_.weight_decay * p));
    }
    return StepStatus::ok;
  }

 private:
  AdamWConfig cfg_;
  long step_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

}  // namespace replab

#endif  // REPLAB_OPTIMIZER_HPP
