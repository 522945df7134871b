#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "replab/denoiser.hpp"
#include "replab/diffusion.hpp"
#include "replab/optimizer.hpp"
#include "support.hpp"

using namespace replab;
using replab::testing::fd_gradient;
using replab::testing::max_relative_error;

namespace {

DenoiserNet small_net(std::uint64_t seed, int latent = 3, int cond = 2, int hidden = 8,
                      int layers = 3, int time_dim = 4) {
  DenoiserConfig cfg;
  cfg.latent_dim = latent;
  cfg.cond_dim = cond;
  cfg.time_dim = time_dim;
  cfg.hidden_dim = hidden;
  cfg.hidden_layers = layers;
  Rng rng(seed);
  return DenoiserNet::seeded(cfg, rng);
}

}  // namespace

TEST_CASE("forward: zero-weight net returns the output bias") {
  DenoiserNet net = small_net(7);
  for (std::size_t i = 0; i < net.param_count(); ++i) net.set_param(i, 0.0);
  const int last = net.layer_count() - 1;
  net.bias(last) = {0.25, -1.5, 3.0};
  Rng rng(1);
  const Vec out = net.forward(rng.normal_vec(3), 5, rng.normal_vec(2));
  CHECK(out[0] == 0.25);
  CHECK(out[1] == -1.5);
  CHECK(out[2] == 3.0);
}

TEST_CASE("forward: golden snapshot is stable") {
  DenoiserNet net = small_net(42);
  const Vec z = {0.5, -0.25, 1.0};
  const Vec cond = {1.0, -1.0};
  const Vec out = net.forward(z, 3, cond);
  // frozen from the first correct build
  CHECK(out[0] == Catch::Approx(-0.0141711122257503).epsilon(1e-12));
  CHECK(out[1] == Catch::Approx(0.0196357121597556).epsilon(1e-12));
  CHECK(out[2] == Catch::Approx(-0.0229166019086254).epsilon(1e-12));
}

TEST_CASE("forward: single-weight perturbation matches the analytic gradient") {
  DenoiserNet net = small_net(11);
  const Vec z = {0.1, 0.2, -0.3};
  const Vec cond = {0.4, -0.6};
  const int t = 2;
  // loss = first output coordinate
  auto f = [&](const DenoiserNet& n) { return n.forward(z, t, cond)[0]; };
  DenoiserNet::Trace trace;
  net.forward_trace(z, t, cond, trace);
  DenoiserGrads analytic = net.zero_grads();
  net.backward(trace, {1.0, 0.0, 0.0}, analytic);

  const double delta = 1e-6;
  const std::size_t idx = 17;
  const double base = f(net);
  net.set_param(idx, net.get_param(idx) + delta);
  const double bumped = f(net);
  CHECK((bumped - base) / delta == Catch::Approx(analytic.get_flat(idx)).margin(1e-4));
}

TEST_CASE("backward: constant loss gives all-zero gradients") {
  DenoiserNet net = small_net(3);
  DenoiserNet::Trace trace;
  Rng rng(9);
  net.forward_trace(rng.normal_vec(3), 1, rng.normal_vec(2), trace);
  DenoiserGrads g = net.zero_grads();
  net.backward(trace, {0.0, 0.0, 0.0}, g);
  for (std::size_t i = 0; i < g.param_count(); ++i) CHECK(g.get_flat(i) == 0.0);
}

TEST_CASE("backward: single-parameter quadratic loss has closed-form gradient") {
  // one linear layer, latent 1, no hidden, no time/cond features
  DenoiserConfig cfg;
  cfg.latent_dim = 1;
  cfg.cond_dim = 0;
  cfg.time_dim = 0;
  cfg.hidden_layers = 0;
  Rng rng(5);
  DenoiserNet net = DenoiserNet::seeded(cfg, rng);
  net.set_param(0, 0.7);  // weight
  net.set_param(1, 0.0);  // bias
  const double target = 0.2;
  // loss = (w*1 - target)^2, dL/dw = 2*(w - target)
  DenoiserNet::Trace trace;
  const Vec out = net.forward_trace({1.0}, 0, {}, trace);
  DenoiserGrads g = net.zero_grads();
  net.backward(trace, {2.0 * (out[0] - target)}, g);
  CHECK(g.get_flat(0) == Catch::Approx(2.0 * (0.7 - 0.2)).epsilon(1e-12));
}

TEST_CASE("backward: finite-difference agreement on random nets and batches") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    DenoiserNet net = small_net(100 + seed);
    Rng rng(seed);
    // fixed batch of (z_t, t, cond, eps) tuples
    struct Sample {
      Vec z;
      int t;
      Vec cond;
      Vec eps;
    };
    std::vector<Sample> batch;
    for (int i = 0; i < 3; ++i)
      batch.push_back({rng.normal_vec(3), static_cast<int>(rng.uniform_int(10)),
                       rng.normal_vec(2), rng.normal_vec(3)});

    auto loss = [&](const DenoiserNet& n) {
      double s = 0.0;
      for (const auto& smp : batch) s += noise_mse(n.forward(smp.z, smp.t, smp.cond), smp.eps);
      return s / batch.size();
    };

    DenoiserGrads analytic = net.zero_grads();
    for (const auto& smp : batch) {
      DenoiserNet::Trace trace;
      const Vec out = net.forward_trace(smp.z, smp.t, smp.cond, trace);
      Vec d_out(out.size());
      for (std::size_t i = 0; i < out.size(); ++i)
        d_out[i] = 2.0 * (out[i] - smp.eps[i]) / out.size() / batch.size();
      net.backward(trace, d_out, analytic);
    }
    const DenoiserGrads fd = fd_gradient(net, loss, 1e-5);
    CHECK(max_relative_error(analytic, fd) < 1e-4);
  }
}

TEST_CASE("adamw: zero gradient and zero decay leave parameters unchanged") {
  DenoiserNet net = small_net(21);
  const DenoiserNet before = net;
  AdamWConfig cfg;
  cfg.weight_decay = 0.0;
  AdamW opt(cfg);
  DenoiserGrads g = net.zero_grads();
  REQUIRE(opt.step(net, g, 1.0) == StepStatus::ok);
  CHECK(net.bits_equal(before));
}

TEST_CASE("adamw: zero gradient with decay shrinks parameters by lr*decay") {
  DenoiserNet net = small_net(22);
  const DenoiserNet before = net;
  AdamWConfig cfg;
  cfg.lr = 0.1;
  cfg.weight_decay = 0.05;
  AdamW opt(cfg);
  DenoiserGrads g = net.zero_grads();
  REQUIRE(opt.step(net, g, 1.0) == StepStatus::ok);
  for (std::size_t i = 0; i < net.param_count(); ++i)
    CHECK(net.get_param(i) == Catch::Approx(before.get_param(i) * (1.0 - 0.1 * 0.05)).margin(1e-15));
}

TEST_CASE("adamw: one step on a scalar parameter matches the hand computation") {
  DenoiserConfig cfg;
  cfg.latent_dim = 1;
  cfg.cond_dim = 0;
  cfg.time_dim = 0;
  cfg.hidden_layers = 0;
  Rng rng(2);
  DenoiserNet net = DenoiserNet::seeded(cfg, rng);
  const double w0 = 0.5;
  net.set_param(0, w0);
  net.set_param(1, 0.0);

  AdamWConfig ocfg;  // lr 1e-4, wd 1e-2, beta1 0.9, beta2 0.999, eps 1e-8
  AdamW opt(ocfg);
  DenoiserGrads g = net.zero_grads();
  g.set_flat(0, 1.0);
  REQUIRE(opt.step(net, g, 1.0) == StepStatus::ok);

  // hand-computed first AdamW step for g = 1:
  const double m = 0.1, v = 0.001;
  const double mhat = m / (1.0 - 0.9), vhat = v / (1.0 - 0.999);
  const double expected = w0 - 1e-4 * (mhat / (std::sqrt(vhat) + 1e-8) + 1e-2 * w0);
  CHECK(net.get_param(0) == Catch::Approx(expected).margin(1e-15));
}

TEST_CASE("adamw: non-finite gradient reports instability without stepping") {
  DenoiserNet net = small_net(23);
  const DenoiserNet before = net;
  AdamW opt;
  DenoiserGrads g = net.zero_grads();
  g.set_flat(0, std::numeric_limits<double>::quiet_NaN());
  CHECK(opt.step(net, g, 1.0) == StepStatus::non_finite_grad);
  CHECK(net.bits_equal(before));
  CHECK(opt.steps_taken() == 0);
}

TEST_CASE("adamw with zero decay equals plain adam element-wise") {
  DenoiserNet net = small_net(31);
  AdamWConfig cfg;
  cfg.lr = 3e-3;
  cfg.weight_decay = 0.0;
  AdamW opt(cfg);

  // reference Adam on a flat copy of the parameters
  const std::size_t n = net.param_count();
  std::vector<double> p(n), m(n, 0.0), v(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) p[i] = net.get_param(i);

  Rng rng(77);
  for (int step = 1; step <= 5; ++step) {
    DenoiserGrads g = net.zero_grads();
    for (std::size_t i = 0; i < n; ++i) g.set_flat(i, rng.normal());
    REQUIRE(opt.step(net, g, 1.0) == StepStatus::ok);
    const double bc1 = 1.0 - std::pow(0.9, step);
    const double bc2 = 1.0 - std::pow(0.999, step);
    for (std::size_t i = 0; i < n; ++i) {
      const double gi = g.get_flat(i);
      m[i] = 0.9 * m[i] + 0.1 * gi;
      v[i] = 0.999 * v[i] + 0.001 * gi * gi;
      p[i] -= 3e-3 * ((m[i] / bc1) / (std::sqrt(v[i] / bc2) + 1e-8));
      CHECK(net.get_param(i) == Catch::Approx(p[i]).margin(1e-15));
    }
  }
}

TEST_CASE("clip_grad_norm: under the bound is a no-op") {
  DenoiserNet net = small_net(41);
  DenoiserGrads g = net.zero_grads();
  g.set_flat(0, 0.3);
  g.set_flat(1, 0.4);  // norm 0.5
  const DenoiserGrads before = g;
  clip_grad_norm(g, 1.0);
  for (std::size_t i = 0; i < g.param_count(); ++i) CHECK(g.get_flat(i) == before.get_flat(i));
}

TEST_CASE("clip_grad_norm: norm 2 input is halved to norm 1") {
  DenoiserNet net = small_net(42);
  DenoiserGrads g = net.zero_grads();
  g.set_flat(0, 1.2);
  g.set_flat(1, 1.6);  // norm 2
  clip_grad_norm(g, 1.0);
  CHECK(g.get_flat(0) == Catch::Approx(0.6).epsilon(1e-12));
  CHECK(g.get_flat(1) == Catch::Approx(0.8).epsilon(1e-12));
  CHECK(std::sqrt(g.squared_norm()) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("clip_grad_norm: output norm is min(input norm, bound) and clipping is idempotent") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    DenoiserNet net = small_net(50 + seed);
    DenoiserGrads g = net.zero_grads();
    Rng rng(seed);
    for (std::size_t i = 0; i < g.param_count(); ++i) g.set_flat(i, rng.normal());
    const double before = std::sqrt(g.squared_norm());
    clip_grad_norm(g, 1.0);
    CHECK(std::sqrt(g.squared_norm()) == Catch::Approx(std::min(before, 1.0)).margin(1e-9));
    const DenoiserGrads once = g;
    clip_grad_norm(g, 1.0);
    for (std::size_t i = 0; i < g.param_count(); ++i) CHECK(g.get_flat(i) == once.get_flat(i));
  }
}

TEST_CASE("warmup_scale ramps linearly and saturates") {
  CHECK(warmup_scale(0, 50) == 0.0);
  CHECK(warmup_scale(25, 50) == 0.5);
  CHECK(warmup_scale(50, 50) == 1.0);
  CHECK(warmup_scale(5000, 50) == 1.0);
  CHECK(warmup_scale(17, 0) == 1.0);
}

TEST_CASE("training steps are bit-identical across equal seeds") {
  auto run = [](std::uint64_t seed) {
    DenoiserNet net = small_net(seed);
    AdamWConfig cfg;
    cfg.lr = 1e-3;
    AdamW opt(cfg);
    Rng rng(seed + 1);
    const DiffusionSchedule sched = DiffusionSchedule::linear(10);
    for (int s = 0; s < 50; ++s) {
      DenoiserGrads g = net.zero_grads();
      denoise_loss_grad(net, sched, rng.normal_vec(3), rng.normal_vec(2), rng, 1.0, g);
      clip_grad_norm(g, 1.0);
      opt.step(net, g, 1.0);
    }
    return net;
  };
  const DenoiserNet a = run(123);
  const DenoiserNet b = run(123);
  CHECK(a.bits_equal(b));
}
