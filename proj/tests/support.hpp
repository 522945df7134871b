#ifndef REPLAB_TESTS_SUPPORT_HPP
#define REPLAB_TESTS_SUPPORT_HPP

#include <cmath>
#include <functional>
#include <vector>

#include "replab/denoiser.hpp"
#include "replab/matrix.hpp"

namespace replab::testing {

// Central finite differences of a scalar function of the net parameters.
// Lives in test code only; independent of the analytic backward pass.
inline DenoiserGrads fd_gradient(DenoiserNet net,
                                 const std::function<double(const DenoiserNet&)>& f,
                                 double h = 1e-5) {
  DenoiserGrads g = net.zero_grads();
  for (std::size_t i = 0; i < net.param_count(); ++i) {
    const double p0 = net.get_param(i);
    net.set_param(i, p0 + h);
    const double fp = f(net);
    net.set_param(i, p0 - h);
    const double fm = f(net);
    net.set_param(i, p0);
    g.set_flat(i, (fp - fm) / (2.0 * h));
  }
  return g;
}

inline double max_relative_error(const DenoiserGrads& a, const DenoiserGrads& b,
                                 double floor = 1e-6) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.param_count(); ++i) {
    const double x = a.get_flat(i);
    const double y = b.get_flat(i);
    const double rel = std::abs(x - y) / std::max({std::abs(x), std::abs(y), floor});
    worst = std::max(worst, rel);
  }
  return worst;
}

// Bayes-optimal noise predictor for an isotropic Gaussian mixture under the
// closed-form noising z_t = sqrt(abar) z0 + sqrt(1-abar) eps. Used as an
// independent oracle for loss floors and perfect-denoiser checks.
struct MixtureOracle {
  std::vector<Vec> means;
  std::vector<double> vars;  // per-component isotropic variance
  std::vector<double> weights;

  Vec predict(const Vec& z_t, double alpha_bar) const {
    const std::size_t dim = z_t.size();
    const std::size_t n = means.size();
    std::vector<double> log_lik(n);
    double max_ll = -1e300;
    for (std::size_t c = 0; c < n; ++c) {
      const double var = alpha_bar * vars[c] + (1.0 - alpha_bar);
      double sq = 0.0;
      for (std::size_t i = 0; i < dim; ++i) {
        const double d = z_t[i] - std::sqrt(alpha_bar) * means[c][i];
        sq += d * d;
      }
      log_lik[c] = std::log(weights[c]) - 0.5 * (dim * std::log(var) + sq / var);
      max_ll = std::max(max_ll, log_lik[c]);
    }
    double denom = 0.0;
    for (std::size_t c = 0; c < n; ++c) denom += std::exp(log_lik[c] - max_ll);
    Vec z0_hat(dim, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
      const double resp = std::exp(log_lik[c] - max_ll) / denom;
      const double var = alpha_bar * vars[c] + (1.0 - alpha_bar);
      const double gain = std::sqrt(alpha_bar) * vars[c] / var;
      for (std::size_t i = 0; i < dim; ++i) {
        const double cond_mean =
            means[c][i] + gain * (z_t[i] - std::sqrt(alpha_bar) * means[c][i]);
        z0_hat[i] += resp * cond_mean;
      }
    }
    Vec eps_hat(dim);
    const double a = std::sqrt(alpha_bar);
    const double b = std::sqrt(1.0 - alpha_bar);
    for (std::size_t i = 0; i < dim; ++i) eps_hat[i] = (z_t[i] - a * z0_hat[i]) / b;
    return eps_hat;
  }
};

}  // namespace replab::testing

#endif  // REPLAB_TESTS_SUPPORT_HPP
