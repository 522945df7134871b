#ifndef REPLAB_DENOISER_HPP
#define REPLAB_DENOISER_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "replab/matrix.hpp"
#include "replab/rng.hpp"

namespace replab {

struct DenoiserConfig {
  int latent_dim = 8;
  int cond_dim = 8;
  int time_dim = 8;
  int hidden_dim = 64;
  int hidden_layers = 3;

  int input_dim() const { return latent_dim + time_dim + cond_dim; }
};

// Sinusoidal features of the integer timestep, transformer-style frequency
// ladder. dim must be even.
inline Vec time_embedding(int t, int dim) {
  if (dim % 2 != 0) throw std::invalid_argument("time_embedding: dim must be even");
  Vec e(dim);
  const int half = dim / 2;
  for (int i = 0; i < half; ++i) {
    const double freq = std::pow(10000.0, -2.0 * i / dim);
    e[2 * i] = std::sin(t * freq);
    e[2 * i + 1] = std::cos(t * freq);
  }
  return e;
}

inline double silu(double x) { return x / (1.0 + std::exp(-x)); }

inline double silu_grad(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

// Gradients (or Adam moments) shaped like a DenoiserNet's parameters.
struct DenoiserGrads {
  std::vector<Matrix> w;
  std::vector<Vec> b;

  void zero() {
    for (auto& m : w) std::fill(m.data.begin(), m.data.end(), 0.0);
    for (auto& v : b) std::fill(v.begin(), v.end(), 0.0);
  }

  void scale(double alpha) {
    for (auto& m : w)
      for (auto& x : m.data) x *= alpha;
    for (auto& v : b)
      for (auto& x : v) x *= alpha;
  }

  void add_scaled(const DenoiserGrads& g, double alpha) {
    for (std::size_t l = 0; l < w.size(); ++l) {
      for (std::size_t i = 0; i < w[l].data.size(); ++i) w[l].data[i] += alpha * g.w[l].data[i];
      for (std::size_t i = 0; i < b[l].size(); ++i) b[l][i] += alpha * g.b[l][i];
    }
  }

  double squared_norm() const {
    double s = 0.0;
    for (const auto& m : w)
      for (double x : m.data) s += x * x;
    for (const auto& v : b)
      for (double x : v) s += x * x;
    return s;
  }

  bool finite() const {
    for (const auto& m : w)
      if (!m.finite()) return false;
    for (const auto& v : b)
      if (!all_finite(v)) return false;
    return true;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& m : w) n += m.data.size();
    for (const auto& v : b) n += v.size();
    return n;
  }

  // Flat indexing: all weight matrices layer by layer, then all biases.
  double get_flat(std::size_t idx) const {
    for (const auto& m : w) {
      if (idx < m.data.size()) return m.data[idx];
      idx -= m.data.size();
    }
    for (const auto& v : b) {
      if (idx < v.size()) return v[idx];
      idx -= v.size();
    }
    throw std::out_of_range("DenoiserGrads::get_flat");
  }

  void set_flat(std::size_t idx, double val) {
    for (auto& m : w) {
      if (idx < m.data.size()) {
        m.data[idx] = val;
        return;
      }
      idx -= m.data.size();
    }
    for (auto& v : b) {
      if (idx < v.size()) {
        v[idx] = val;
        return;
      }
      idx -= v.size();
    }
    throw std::out_of_range("DenoiserGrads::set_flat");
  }
};

// MLP noise predictor: (z_t, time features, condition embedding) -> eps_hat.
// Hidden layers use SiLU, the output layer is linear. Forward/backward are
// explicit so gradients can be checked against finite differences.
class DenoiserNet {
 public:
  DenoiserNet() = default;

  static DenoiserNet seeded(const DenoiserConfig& cfg, Rng& rng) {
    if (cfg.latent_dim < 1 || cfg.hidden_layers < 0)
      throw std::invalid_argument("DenoiserNet: bad config");
    DenoiserNet net;
    net.cfg_ = cfg;
    int in = cfg.input_dim();
    for (int l = 0; l < cfg.hidden_layers; ++l) {
      net.w_.push_back(Matrix::seeded_gaussian(cfg.hidden_dim, in, std::sqrt(2.0 / in), rng));
      net.b_.push_back(Vec(cfg.hidden_dim, 0.0));
      in = cfg.hidden_dim;
    }
    // small-scale output init keeps the initial prediction near zero
    net.w_.push_back(Matrix::seeded_gaussian(cfg.latent_dim, in, 0.01, rng));
    net.b_.push_back(Vec(cfg.latent_dim, 0.0));
    return net;
  }

  const DenoiserConfig& config() const { return cfg_; }
  int layer_count() const { return static_cast<int>(w_.size()); }
  const Matrix& weight(int l) const { return w_[l]; }
  const Vec& bias(int l) const { return b_[l]; }
  Matrix& weight(int l) { return w_[l]; }
  Vec& bias(int l) { return b_[l]; }

  struct Trace {
    Vec input;
    std::vector<Vec> pre;   // pre-activation per layer
    std::vector<Vec> post;  // activated output per layer (last layer: linear)
  };

  Vec assemble_input(const Vec& z_t, int t, const Vec& cond) const {
    if (static_cast<int>(z_t.size()) != cfg_.latent_dim)
      throw std::invalid_argument("DenoiserNet: latent dimension mismatch");
    if (static_cast<int>(cond.size()) != cfg_.cond_dim)
      throw std::invalid_argument("DenoiserNet: condition dimension mismatch");
    Vec in;
    in.reserve(cfg_.input_dim());
    in.insert(in.end(), z_t.begin(), z_t.end());
    if (cfg_.time_dim > 0) {
      const Vec te = time_embedding(t, cfg_.time_dim);
      in.insert(in.end(), te.begin(), te.end());
    }
    in.insert(in.end(), cond.begin(), cond.end());
    return in;
  }

  Vec forward(const Vec& z_t, int t, const Vec& cond) const {
    Vec h = assemble_input(z_t, t, cond);
    const int layers = layer_count();
    for (int l = 0; l < layers; ++l) {
      Vec pre = matvec(w_[l], h);
      axpy(1.0, b_[l], pre);
      if (l + 1 < layers)
        for (auto& x : pre) x = silu(x);
      h = std::move(pre);
    }
    return h;
  }

  Vec forward_trace(const Vec& z_t, int t, const Vec& cond, Trace& trace) const {
    trace.input = assemble_input(z_t, t, cond);
    const int layers = layer_count();
    trace.pre.assign(layers, {});
    trace.post.assign(layers, {});
    const Vec* h = &trace.input;
    for (int l = 0; l < layers; ++l) {
      Vec pre = matvec(w_[l], *h);
      axpy(1.0, b_[l], pre);
      trace.pre[l] = pre;
      if (l + 1 < layers)
        for (auto& x : pre) x = silu(x);
      trace.post[l] = std::move(pre);
      h = &trace.post[l];
    }
    return trace.post.back();
  }

  // Accumulates dLoss/dParams into grads given dLoss/dOutput.
  void backward(const Trace& trace, const Vec& d_out, DenoiserGrads& grads) const {
    const int layers = layer_count();
    Vec delta = d_out;
    for (int l = layers - 1; l >= 0; --l) {
      const Vec& upstream = (l == 0) ? trace.input : trace.post[l - 1];
      Matrix& gw = grads.w[l];
      for (int i = 0; i < gw.rows; ++i) {
        const double di = delta[i];
        double* row = gw.data.data() + static_cast<std::size_t>(i) * gw.cols;
        for (int j = 0; j < gw.cols; ++j) row[j] += di * upstream[j];
        grads.b[l][i] += di;
      }
      if (l > 0) {
        delta = matvec_t(w_[l], delta);
        for (std::size_t j = 0; j < delta.size(); ++j) delta[j] *= silu_grad(trace.pre[l - 1][j]);
      }
    }
  }

  DenoiserGrads zero_grads() const {
    DenoiserGrads g;
    for (const auto& m : w_) g.w.push_back(Matrix::zeros(m.rows, m.cols));
    for (const auto& v : b_) g.b.push_back(Vec(v.size(), 0.0));
    return g;
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& m : w_) n += m.data.size();
    for (const auto& v : b_) n += v.size();
    return n;
  }

  double get_param(std::size_t idx) const {
    for (const auto& m : w_) {
      if (idx < m.data.size()) return m.data[idx];
      idx -= m.data.size();
    }
    for (const auto& v : b_) {
      if (idx < v.size()) return v[idx];
      idx -= v.size();
    }
    throw std::out_of_range("DenoiserNet::get_param");
  }

  void set_param(std::size_t idx, double val) {
    for (auto& m : w_) {
      if (idx < m.data.size()) {
        m.data[idx] = val;
        return;
      }
      idx -= m.data.size();
    }
    for (auto& v : b_) {
      if (idx < v.size()) {
        v[idx] = val;
        return;
      }
      idx -= v.size();
    }
    throw std::out_of_range("DenoiserNet::set_param");
  }

  bool bits_equal(const DenoiserNet& other) const {
    if (w_.size() != other.w_.size()) return false;
    for (std::size_t l = 0; l < w_.size(); ++l) {
      if (w_[l].data != other.w_[l].data) return false;
      if (b_[l] != other.b_[l]) return false;
    }
    return true;
  }

 private:
  DenoiserConfig cfg_;
  std::vector<Matrix> w_;
  std::vector<Vec> b_;
};

}  // namespace replab

#endif  // REPLAB_DENOISER_HPP
