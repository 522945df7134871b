#ifndef REPLAB_CONTINUAL_HPP
#define REPLAB_CONTINUAL_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "replab/denoiser.hpp"
#include "replab/diffusion.hpp"
#include "replab/latentspace.hpp"
#include "replab/metrics.hpp"
#include "replab/optimizer.hpp"
#include "replab/replay.hpp"
#include "replab/rng.hpp"

namespace replab {

enum class Method { naive, er, lr, slr, offline };

inline bool is_replay(Method m) { return m == Method::er || m == Method::lr || m == Method::slr; }

inline std::string method_name(Method m) {
  switch (m) {
    case Method::naive: return "naive";
    case Method::er: return "er";
    case Method::lr: return "lr";
    case Method::slr: return "slr";
    case Method::offline: return "offline";
  }
  throw std::logic_error("method_name: bad enum");
}

inline Method method_from_name(const std::string& s) {
  if (s == "naive") return Method::naive;
  if (s == "er") return Method::er;
  if (s == "lr") return Method::lr;
  if (s == "slr") return Method::slr;
  if (s == "offline") return Method::offline;
  throw std::invalid_argument("unknown method: " + s);
}

struct MethodConfig {
  Method method = Method::naive;
  double lambda_memory = 0.5;
  std::uint64_t memory_budget_bytes = 2560;
  int retrieval_k = 4;
  double loss_threshold = 1.0;  // restart trigger; 1.5 for replay methods
  int max_retries = 5;
  int min_steps = 100;
  int max_steps = 800;
  int grad_accum = 4;
  int warmup_steps = 50;
  double early_stop_ema = 0.05;  // <= 0 disables early termination
  int ema_window = 50;
  AdamWConfig optimizer;

  static MethodConfig defaults_for(Method m) {
    MethodConfig c;
    c.method = m;
    c.loss_threshold = is_replay(m) ? 1.5 : 1.0;
    return c;
  }

  void validate() const {
    if (lambda_memory < 0.0 || lambda_memory > 1.0)
      throw std::invalid_argument("MethodConfig: lambda_memory outside [0,1]");
    if (loss_threshold <= 0.0) throw std::invalid_argument("MethodConfig: loss_threshold <= 0");
    if (max_retries < 0) throw std::invalid_argument("MethodConfig: max_retries < 0");
    if (min_steps < 0 || max_steps < 1 || min_steps > max_steps)
      throw std::invalid_argument("MethodConfig: bad step bounds");
    if (grad_accum < 1) throw std::invalid_argument("MethodConfig: grad_accum < 1");
    if (retrieval_k < 1) throw std::invalid_argument("MethodConfig: retrieval_k < 1");
    if (ema_window < 1) throw std::invalid_argument("MethodConfig: ema_window < 1");
  }
};

inline double combined_loss(double current, double memory, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("combined_loss: lambda outside [0,1]");
  return (1.0 - lambda) * current + lambda * memory;
}

struct TrainPair {
  Vec x;     // data-space sample
  Vec cond;  // condition embedding (prompt variant applied)
};

struct TaskDataset {
  std::vector<TrainPair> pairs;
  // Group id per pair. When non-empty, each pass shuffles within groups and
  // interleaves them round-robin (joint training with equal representation);
  // otherwise the whole dataset is shuffled per pass.
  std::vector<int> groups;
};

struct TrainOutcome {
  int restarts = 0;
  bool failed = false;
  long micro_steps = 0;
  long optimizer_updates = 0;
  bool early_stopped = false;
  double final_ema = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> loss_trace;            // per micro-step, successful attempt
  std::map<int, long> replay_stage_counts;   // stage id -> retrieval count
};

struct TrainHooks {
  // Overrides the monitored loss (not the gradients); used to inject
  // instability in tests. Arguments: attempt index, micro-step, true loss.
  std::function<double(int, long, double)> monitor_loss;
};

namespace detail {

inline std::vector<std::size_t> pass_order(const TaskDataset& data, Rng& rng) {
  const std::size_t n = data.pairs.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  auto shuffle = [&rng](std::vector<std::size_t>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  };
  if (data.groups.empty()) {
    shuffle(order);
    return order;
  }
  std::map<int, std::vector<std::size_t>> by_group;
  for (std::size_t i = 0; i < n; ++i) by_group[data.groups[i]].push_back(i);
  for (auto& [g, idx] : by_group) shuffle(idx);
  std::vector<std::size_t> interleaved;
  interleaved.reserve(n);
  std::size_t round = 0;
  while (interleaved.size() < n) {
    for (auto& [g, idx] : by_group)
      if (round < idx.size()) interleaved.push_back(idx[round]);
    ++round;
  }
  return interleaved;
}

}  // namespace detail

// Trains the net on one task (or a joint dataset) under the stability
// protocol: micro-batches of one sample, gradient accumulation, warm-up,
// clipping, EMA loss monitoring with restart-on-breach (fresh derived seed
// per attempt), and a minimum step count before early termination. Replay
// methods mix in one retrieved memory sample per micro-step.
//
// RNG streams are split per concern (data order / noise / replay / restart)
// so disabling one consumer leaves the others' draws untouched.
inline TrainOutcome train_task(DenoiserNet& net, const TaskDataset& data, const MethodConfig& cfg,
                               const FrozenCodec& codec, const DiffusionSchedule& sched,
                               MemoryBuffer* buffer, std::uint64_t run_seed, int stage,
                               const TrainHooks& hooks = {}) {
  cfg.validate();
  if (data.pairs.empty()) throw std::invalid_argument("train_task: empty dataset");
  const DenoiserNet snapshot = net;
  const double lambda = cfg.lambda_memory;
  const double ema_alpha = 2.0 / (cfg.ema_window + 1.0);

  TrainOutcome out;
  for (int attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    net = snapshot;
    AdamW opt(cfg.optimizer);
    const std::uint64_t attempt_seed = derive_seed(run_seed, stream::restart, stage, attempt);
    Rng data_rng(derive_seed(attempt_seed, stream::data));
    Rng noise_rng(derive_seed(attempt_seed, stream::noise));
    Rng replay_rng(derive_seed(attempt_seed, stream::replay));

    out.loss_trace.clear();
    out.replay_stage_counts.clear();
    out.micro_steps = 0;
    out.optimizer_updates = 0;
    out.early_stopped = false;

    DenoiserGrads acc = net.zero_grads();
    int group_count = 0;
    // Bias-corrected EMA of the monitored loss: behaves like a running mean
    // until the window fills, so the estimate never hinges on a single draw.
    double ema_raw = 0.0;
    double ema = 0.0;
    bool breached = false;
    // The monitor arms once the smoothed loss is solidly below the threshold
    // (90%, hysteresis against single-sample loss noise); from-scratch nets
    // start near loss 1, so an unarmed monitor would mistake the initial
    // transient for instability.
    bool armed = false;
    std::vector<std::size_t> order;
    std::size_t pos = 0;

    for (long s = 1; s <= cfg.max_steps; ++s) {
      if (pos == order.size()) {
        order = detail::pass_order(data, data_rng);
        pos = 0;
      }
      const TrainPair& pair = data.pairs[order[pos++]];
      const Vec z0 = codec.encode(pair.x);

      double total;
      const bool use_replay =
          is_replay(cfg.method) && buffer != nullptr && buffer->size() > 0 && lambda > 0.0;
      if (use_replay) {
        const double lc = denoise_loss_grad(net, sched, z0, pair.cond, noise_rng, 1.0 - lambda, acc);
        ReplayItem item;
        if (cfg.method == Method::slr) {
          const Vec query = form_query({z0});
          auto top = buffer->retrieve_topk_similar(query, static_cast<std::size_t>(cfg.retrieval_k));
          item = top[static_cast<std::size_t>(replay_rng.uniform_int(top.size()))];
        } else {
          item = buffer->retrieve_uniform(1, replay_rng)[0];
        }
        ++out.replay_stage_counts[item.task_id];
        const Vec z0_mem = (cfg.method == Method::er) ? codec.encode(item.payload) : item.payload;
        const double lm = denoise_loss_grad(net, sched, z0_mem, item.cond, replay_rng, lambda, acc);
        total = combined_loss(lc, lm, lambda);
      } else {
        total = denoise_loss_grad(net, sched, z0, pair.cond, noise_rng, 1.0, acc);
      }

      double monitored = total;
      if (hooks.monitor_loss) monitored = hooks.monitor_loss(attempt, s, total);
      ema_raw = (1.0 - ema_alpha) * ema_raw + ema_alpha * monitored;
      ema = ema_raw / (1.0 - std::pow(1.0 - ema_alpha, static_cast<double>(s)));
      out.loss_trace.push_back(monitored);
      out.micro_steps = s;
      if (!std::isfinite(monitored)) {
        breached = true;
        break;
      }

      ++group_count;
      if (s % cfg.grad_accum == 0 || s == cfg.max_steps) {
        acc.scale(1.0 / group_count);
        clip_grad_norm(acc, 1.0);
        const StepStatus status = opt.step(net, acc, warmup_scale(s, cfg.warmup_steps));
        acc.zero();
        group_count = 0;
        ++out.optimizer_updates;
        if (status == StepStatus::non_finite_grad) {
          breached = true;
          break;
        }
      }

      if (s > cfg.warmup_steps) {
        if (!armed && ema <= 0.9 * cfg.loss_threshold) armed = true;
        if (armed && ema > cfg.loss_threshold) {
          breached = true;
          break;
        }
      }
      if (cfg.early_stop_ema > 0.0 && s >= cfg.min_steps && ema < cfg.early_stop_ema) {
        out.early_stopped = true;
        break;
      }
    }

    if (!breached) {
      out.restarts = attempt;
      out.final_ema = ema;
      return out;
    }
  }

  // Retries exhausted: leave the model as it was before this task and flag
  // the failure; the caller keeps the run going.
  net = snapshot;
  out.failed = true;
  out.restarts = cfg.max_retries;
  out.final_ema = std::numeric_limits<double>::quiet_NaN();
  return out;
}

struct RunSpec {
  MethodConfig method;
  DenoiserConfig net;
  DiffusionSchedule schedule;
  int n_train = 48;
  int n_eval = 10;
};

struct SequenceResult {
  std::vector<EvalRecord> records;
  std::vector<TrainOutcome> outcomes;  // one per stage
  std::vector<int> order;              // stage -> concept index into the suite
  std::optional<MemoryBuffer> buffer;  // final buffer (replay methods only)
  DenoiserNet final_net;
};

// Deterministic per-concept training set: the concept's mixture draws paired
// with cycled prompt variants. Keyed by (suite seed, run seed, concept) so
// every method sees identical data at a given run seed, while across run
// seeds the draws differ and concept-level sampling luck averages out.
inline TaskDataset make_task_dataset(const TaskSuite& suite, int concept_index, int n_train,
                                     std::uint64_t run_seed) {
  const ConceptTask& task = suite.tasks.at(concept_index);
  Rng rng(derive_seed(derive_seed(suite.params.seed, 0xDA7A, static_cast<std::uint64_t>(task.id)),
                      run_seed));
  TaskDataset ds;
  const auto xs = sample_task_data(task, n_train, rng);
  for (int i = 0; i < n_train; ++i) ds.pairs.push_back({xs[i], task.condition(i)});
  return ds;
}

// Runs the full sequential protocol for one (method, seed): train stage by
// stage, evaluate every learned concept after each stage, then fold the
// stage's data into the memory buffer. The joint-training method instead
// refits from the initial weights on the union of stages seen so far, with
// the per-stage budget scaled so each concept keeps the same share of steps.
inline SequenceResult run_sequence(const TaskSuite& suite, const std::vector<int>& order,
                                   const RunSpec& spec, std::uint64_t seed,
                                   const TrainHooks& hooks = {}) {
  if (order.empty()) throw std::invalid_argument("run_sequence: empty task order");
  for (int idx : order)
    if (idx < 0 || idx >= static_cast<int>(suite.tasks.size()))
      throw std::invalid_argument("run_sequence: order index out of range");
  const MethodConfig& cfg = spec.method;
  cfg.validate();

  const int T = static_cast<int>(order.size());
  Rng init_rng(derive_seed(seed, stream::init));
  const DenoiserNet initial_net = DenoiserNet::seeded(spec.net, init_rng);

  // Per-stage datasets and per-concept reference features.
  std::vector<TaskDataset> datasets;
  std::vector<std::vector<Vec>> reference_features;
  for (int k = 0; k < T; ++k) {
    datasets.push_back(make_task_dataset(suite, order[k], spec.n_train, seed));
    std::vector<Vec> refs;
    refs.reserve(datasets.back().pairs.size());
    for (const auto& p : datasets.back().pairs) refs.push_back(suite.embedder.embed(p.x));
    reference_features.push_back(std::move(refs));
  }

  SequenceResult result;
  result.order = order;
  std::optional<MemoryBuffer> buffer;
  if (is_replay(cfg.method)) {
    const auto caps = equal_budget_capacities(
        cfg.memory_budget_bytes, static_cast<std::uint64_t>(suite.params.data_dim) * kBytesPerScalar,
        static_cast<std::uint64_t>(suite.params.latent_dim) * kBytesPerScalar);
    buffer.emplace(cfg.method == Method::er ? caps.raw_capacity : caps.latent_capacity);
  }

  DenoiserNet net = initial_net;
  for (int k = 1; k <= T; ++k) {
    if (cfg.method == Method::offline) {
      // Fresh fit on the union of stages 1..k, round-robin interleaved.
      net = initial_net;
      TaskDataset joint;
      for (int j = 0; j < k; ++j)
        for (const auto& p : datasets[j].pairs) {
          joint.pairs.push_back(p);
          joint.groups.push_back(j + 1);
        }
      MethodConfig stage_cfg = cfg;
      stage_cfg.max_steps = cfg.max_steps * k;
      result.outcomes.push_back(
          train_task(net, joint, stage_cfg, suite.codec, spec.schedule, nullptr, seed, k, hooks));
    } else {
      result.outcomes.push_back(train_task(net, datasets[k - 1], cfg, suite.codec, spec.schedule,
                                           buffer ? &*buffer : nullptr, seed, k, hooks));
    }

    // Evaluate every concept learned so far.
    for (int l = 1; l <= k; ++l) {
      const ConceptTask& eval_concept = suite.tasks[order[l - 1]];
      Rng eval_rng(derive_seed(seed, stream::eval, k, l));
      std::vector<Vec> gen_feats;
      gen_feats.reserve(spec.n_eval);
      for (int i = 0; i < spec.n_eval; ++i) {
        const Vec z = sample(net, spec.schedule, eval_concept.condition(), eval_rng);
        gen_feats.push_back(suite.embedder.embed(suite.codec.decode(z)));
      }
      EvalRecord rec;
      rec.method = method_name(cfg.method);
      rec.seed = seed;
      rec.tasks_learned = k;
      rec.eval_task = l;
      rec.ia = image_alignment(gen_feats, reference_features[l - 1]).value;
      rec.ta = text_alignment(gen_feats, suite.embedder.embed_condition(eval_concept.condition())).value;
      const VendiScores v = vendi_score(gen_feats);
      rec.diversity = v.score;
      rec.diversity_eigen = v.eigen_score;
      result.records.push_back(rec);
    }

    // Fold the stage's training data into memory after the stage is done, so
    // training on stage k only ever replays stages < k.
    if (buffer) {
      Rng buf_rng(derive_seed(seed, stream::buffer, k));
      for (const auto& p : datasets[k - 1].pairs) {
        ReplayItem item;
        item.payload = (cfg.method == Method::er) ? p.x : suite.codec.encode(p.x);
        item.cond = p.cond;
        item.task_id = k;
        buffer->offer(std::move(item), buf_rng);
      }
    }
  }

  result.buffer = std::move(buffer);
  result.final_net = std::move(net);
  return result;
}

}  // namespace replab

#endif  // REPLAB_CONTINUAL_HPP
