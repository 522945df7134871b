#ifndef REPLAB_HARNESS_HPP
#define REPLAB_HARNESS_HPP

#include <algorithm>
#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "replab/config.hpp"
#include "replab/continual.hpp"
#include "replab/stats.hpp"

namespace replab {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- running

struct RunOutput {
  Method method = Method::naive;
  std::uint64_t seed = 0;
  SequenceResult seq;
  bool crashed = false;
  std::string error;
};

struct ExperimentOutput {
  std::string config_hash;
  std::vector<int> order;
  std::vector<RunOutput> runs;          // ordered (method as configured, seed ascending)
  std::vector<EvalRecord> records;      // concatenated in run order
  bool any_task_failures = false;
  bool any_crashes = false;
};

// Executes every (method, seed) job. Jobs are independent; workers fill
// pre-assigned slots so the output order never depends on scheduling.
inline ExperimentOutput run_experiment(const ExperimentConfig& cfg, int jobs = 1,
                                       std::uint64_t seed_offset = 0) {
  cfg.validate();
  const TaskSuite suite = TaskSuite::build(cfg.suite_params());
  const std::vector<int> order = cfg.task_order();

  ExperimentOutput out;
  out.config_hash = cfg.hash();
  out.order = order;
  for (const auto& mname : cfg.methods)
    for (int s = 0; s < cfg.seeds; ++s) {
      RunOutput r;
      r.method = method_from_name(mname);
      r.seed = cfg.seed_base + seed_offset + static_cast<std::uint64_t>(s);
      out.runs.push_back(std::move(r));
    }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= out.runs.size()) return;
      RunOutput& job = out.runs[i];
      try {
        job.seq = run_sequence(suite, order, cfg.run_spec(job.method), job.seed);
      } catch (const std::exception& e) {
        job.crashed = true;
        job.error = e.what();
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(out.runs.size())));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  for (const auto& run : out.runs) {
    if (run.crashed) {
      out.any_crashes = true;
      continue;
    }
    for (const auto& o : run.seq.outcomes) out.any_task_failures |= o.failed;
    out.records.insert(out.records.end(), run.seq.records.begin(), run.seq.records.end());
  }
  return out;
}

// ---------------------------------------------------------------- file io

inline std::string format_number(double v) { return detail::format_double(v); }

// write-temp-then-rename so a killed process never leaves a partial file
inline void atomic_write(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string());
    os << content;
  }
  fs::rename(tmp, path);
}

inline constexpr const char* kAggregateHeader =
    "config_hash,method,seed,tasks_learned,eval_task,ia,ta,diversity";

inline std::string aggregate_csv(const std::string& config_hash,
                                 const std::vector<EvalRecord>& records) {
  std::ostringstream os;
  os << kAggregateHeader << "\n";
  for (const auto& r : records)
    os << config_hash << ',' << r.method << ',' << r.seed << ',' << r.tasks_learned << ','
       << r.eval_task << ',' << format_number(r.ia) << ',' << format_number(r.ta) << ','
       << format_number(r.diversity) << "\n";
  return os.str();
}

struct TfrRow {
  std::string method;
  std::uint64_t seed = 0;
  std::string metric;  // tfr_ia | tfr_ta
  double value = 0.0;
};

// Forgetting rates at the final stage, one row per (method, seed, metric).
// Sequences with a single stage produce no rows (the measure is undefined).
inline std::vector<TfrRow> compute_tfr_rows(const std::vector<EvalRecord>& records) {
  std::map<std::pair<std::string, std::uint64_t>, int> max_k;
  for (const auto& r : records) {
    auto& k = max_k[{r.method, r.seed}];
    k = std::max(k, r.tasks_learned);
  }
  std::vector<TfrRow> rows;
  for (const auto& [key, k] : max_k) {
    if (k < 2) continue;
    MetricMatrix ia(k), ta(k);
    for (const auto& r : records)
      if (r.method == key.first && r.seed == key.second) {
        ia.set(r.tasks_learned, r.eval_task, r.ia);
        ta.set(r.tasks_learned, r.eval_task, r.ta);
      }
    rows.push_back({key.first, key.second, "tfr_ia", tfr(ia, k).value()});
    rows.push_back({key.first, key.second, "tfr_ta", tfr(ta, k).value()});
  }
  return rows;
}

inline std::string tfr_csv(const std::string& config_hash, const std::vector<TfrRow>& rows) {
  std::ostringstream os;
  os << "config_hash,method,seed,metric,value\n";
  for (const auto& r : rows)
    os << config_hash << ',' << r.method << ',' << r.seed << ',' << r.metric << ','
       << format_number(r.value) << "\n";
  return os.str();
}

inline nlohmann::json run_json(const ExperimentOutput& out, const RunOutput& run) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["config_hash"] = out.config_hash;
  j["method"] = method_name(run.method);
  j["seed"] = run.seed;
  j["order"] = out.order;
  if (run.crashed) {
    j["crashed"] = true;
    j["error"] = run.error;
    return j;
  }
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& o : run.seq.outcomes) {
    nlohmann::json s;
    s["restarts"] = o.restarts;
    s["failed"] = o.failed;
    s["micro_steps"] = o.micro_steps;
    s["optimizer_updates"] = o.optimizer_updates;
    s["early_stopped"] = o.early_stopped;
    nlohmann::json counts = nlohmann::json::object();
    for (const auto& [stage, n] : o.replay_stage_counts) counts[std::to_string(stage)] = n;
    s["replay_stage_counts"] = counts;
    // downsampled loss trace, at most 160 points per stage
    nlohmann::json trace = nlohmann::json::array();
    const std::size_t stride = std::max<std::size_t>(1, o.loss_trace.size() / 160);
    for (std::size_t i = 0; i < o.loss_trace.size(); i += stride) trace.push_back(o.loss_trace[i]);
    s["loss_trace"] = trace;
    stages.push_back(std::move(s));
  }
  j["stages"] = stages;
  nlohmann::json evals = nlohmann::json::array();
  for (const auto& r : run.seq.records) {
    nlohmann::json e;
    e["tasks_learned"] = r.tasks_learned;
    e["eval_task"] = r.eval_task;
    e["ia"] = r.ia;
    e["ta"] = r.ta;
    e["diversity"] = r.diversity;
    e["diversity_eigen"] = r.diversity_eigen;
    evals.push_back(std::move(e));
  }
  j["eval"] = evals;
  return j;
}

// Mean +- std tables over the final stage, one block per metric, plus the
// cross-method forgetting summary. Flags the similarity-vs-uniform retrieval
// comparison since its full-scale direction may not carry to this scale.
inline std::string summary_text(const ExperimentConfig& cfg, const ExperimentOutput& out) {
  std::ostringstream os;
  os << "experiment " << cfg.name << "  (config " << out.config_hash << ")\n";
  os << "methods:";
  for (const auto& m : cfg.methods) os << ' ' << m;
  os << "  seeds: " << cfg.seeds << "  tasks: " << cfg.tasks << "\n\n";

  const int K = cfg.tasks;
  auto cell = [&](const std::string& method, int l, auto select) {
    std::vector<double> vals;
    for (const auto& r : out.records)
      if (r.method == method && r.tasks_learned == K && r.eval_task == l) vals.push_back(select(r));
    return vals;
  };
  auto fmt_ms = [](const std::vector<double>& vals) {
    if (vals.empty()) return std::string("       --");
    const MeanStd ms = mean_std(vals);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%6.3f+-%.3f", ms.mean, ms.stddev.value_or(0.0));
    return std::string(buf);
  };

  struct MetricDef {
    const char* title;
    double (*get)(const EvalRecord&);
  };
  const MetricDef defs[] = {
      {"image alignment (final stage)", [](const EvalRecord& r) { return r.ia; }},
      {"text alignment (final stage)", [](const EvalRecord& r) { return r.ta; }},
      {"diversity (final stage)", [](const EvalRecord& r) { return r.diversity; }},
  };
  for (const auto& def : defs) {
    os << def.title << "\n";
    os << "  method  ";
    for (int l = 1; l <= K; ++l) os << "   task" << l << "       ";
    os << "\n";
    for (const auto& m : cfg.methods) {
      os << "  " << m << std::string(m.size() < 8 ? 8 - m.size() : 1, ' ');
      for (int l = 1; l <= K; ++l) os << fmt_ms(cell(m, l, def.get)) << "  ";
      os << "\n";
    }
    os << "\n";
  }

  const auto tfr_rows = compute_tfr_rows(out.records);
  os << "task forgetting rate (final stage)\n";
  for (const char* metric : {"tfr_ia", "tfr_ta"}) {
    os << "  " << metric << ":\n";
    for (const auto& m : cfg.methods) {
      std::vector<double> vals;
      for (const auto& r : tfr_rows)
        if (r.method == m && r.metric == metric) vals.push_back(r.value);
      os << "    " << m << std::string(m.size() < 8 ? 8 - m.size() : 1, ' ') << fmt_ms(vals) << "\n";
    }
  }

  const bool has_lr = std::count(cfg.methods.begin(), cfg.methods.end(), "lr") > 0;
  const bool has_slr = std::count(cfg.methods.begin(), cfg.methods.end(), "slr") > 0;
  if (has_lr && has_slr) {
    std::vector<double> lr_vals, slr_vals;
    for (const auto& r : tfr_rows)
      if (r.metric == "tfr_ia") {
        if (r.method == "lr") lr_vals.push_back(r.value);
        if (r.method == "slr") slr_vals.push_back(r.value);
      }
    if (!lr_vals.empty() && !slr_vals.empty()) {
      const double lr_m = mean_std(lr_vals).mean;
      const double slr_m = mean_std(slr_vals).mean;
      os << "\nNOTE similarity-based vs uniform retrieval: mean tfr_ia slr=" << format_number(slr_m)
         << " vs lr=" << format_number(lr_m) << " -> "
         << (slr_m > lr_m ? "similarity retrieval forgets MORE (matches the full-scale finding)"
                          : "similarity retrieval does not forget more AT THIS SCALE "
                            "(full-scale finding not replicated; scale artifact suspected)")
         << "\n";
    }
  }

  int failures = 0, crashes = 0;
  for (const auto& run : out.runs) {
    if (run.crashed) ++crashes;
    else
      for (const auto& o : run.seq.outcomes) failures += o.failed ? 1 : 0;
  }
  os << "\nfailed tasks: " << failures << "  crashed runs: " << crashes << "\n";
  return os.str();
}

// Writes aggregate.csv, tfr.csv, meta.json, summary.txt and per-run JSON
// files (plus buffer dumps when configured) under out_dir.
inline void write_experiment_files(const ExperimentConfig& cfg, const ExperimentOutput& out,
                                   const fs::path& out_dir) {
  atomic_write(out_dir / "config.cfg", cfg.serialize());
  atomic_write(out_dir / "aggregate.csv", aggregate_csv(out.config_hash, out.records));
  atomic_write(out_dir / "tfr.csv", tfr_csv(out.config_hash, compute_tfr_rows(out.records)));

  nlohmann::json meta;
  meta["schema_version"] = 1;
  meta["config_hash"] = out.config_hash;
  meta["name"] = cfg.name;
  meta["order"] = cfg.order;
  meta["methods"] = cfg.methods;
  meta["seeds"] = cfg.seeds;
  meta["seed_base"] = cfg.seed_base;
  meta["compression_ratio"] = static_cast<double>(cfg.data_dim) / cfg.latent_dim;
  {
    const auto caps = equal_budget_capacities(cfg.memory_budget_bytes,
                                              static_cast<std::uint64_t>(cfg.data_dim) * kBytesPerScalar,
                                              static_cast<std::uint64_t>(cfg.latent_dim) * kBytesPerScalar);
    meta["raw_buffer_capacity"] = caps.raw_capacity;
    meta["latent_buffer_capacity"] = caps.latent_capacity;
  }
  atomic_write(out_dir / "meta.json", meta.dump(2) + "\n");

  for (const auto& run : out.runs) {
    const std::string stem = method_name(run.method) + "_" + std::to_string(run.seed);
    atomic_write(out_dir / "runs" / (stem + ".json"), run_json(out, run).dump(2) + "\n");
    if (cfg.dump_buffers && !run.crashed && run.seq.buffer.has_value()) {
      std::ostringstream os;
      run.seq.buffer->dump_jsonl(os);
      atomic_write(out_dir / "buffers" / (stem + ".jsonl"), os.str());
    }
  }
  atomic_write(out_dir / "summary.txt", summary_text(cfg, out));
}

// ---------------------------------------------------------------- reading

inline std::vector<EvalRecord> read_aggregate_csv(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error(path.string() + ": empty file");
  if (detail::trim(line) != kAggregateHeader)
    throw std::runtime_error(path.string() + ": unexpected header");
  std::vector<EvalRecord> records;
  while (std::getline(is, line)) {
    if (detail::trim(line).empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 8) throw std::runtime_error(path.string() + ": bad row: " + line);
    EvalRecord r;
    r.method = fields[1];
    r.seed = detail::parse_number<std::uint64_t>("seed", fields[2]);
    r.tasks_learned = detail::parse_number<int>("tasks_learned", fields[3]);
    r.eval_task = detail::parse_number<int>("eval_task", fields[4]);
    r.ia = detail::parse_number<double>("ia", fields[5]);
    r.ta = detail::parse_number<double>("ta", fields[6]);
    r.diversity = detail::parse_number<double>("diversity", fields[7]);
    records.push_back(std::move(r));
  }
  return records;
}

// ---------------------------------------------------------------- stats

struct SignificanceRow {
  std::string comparison;  // "a-vs-b"
  std::string metric;      // ia | ta | diversity | tfr_ia | tfr_ta
  std::string task;        // task<l> or "overall"
  double raw_p = 1.0;
  double adjusted_p = 1.0;
  bool reject = false;
};

struct SignificanceReport {
  std::vector<SignificanceRow> rows;
  double q = 0.05;
  // correction family: all (comparison x task) tests sharing a metric
  std::string family = "per-metric across all comparison x task tests";
  std::string zero_policy = "zero differences dropped before ranking";
};

inline std::vector<std::pair<std::string, std::string>> parse_pairs(
    const std::string& spec, const std::vector<std::string>& methods) {
  std::vector<std::pair<std::string, std::string>> pairs;
  if (spec == "all") {
    for (std::size_t i = 0; i < methods.size(); ++i)
      for (std::size_t j = i + 1; j < methods.size(); ++j)
        pairs.emplace_back(methods[i], methods[j]);
    return pairs;
  }
  for (const auto& part : detail::split_list(spec)) {
    const auto colon = part.find(':');
    if (colon == std::string::npos)
      throw std::runtime_error("pairs: expected 'a:b' entries, got '" + part + "'");
    pairs.emplace_back(detail::trim(part.substr(0, colon)), detail::trim(part.substr(colon + 1)));
  }
  return pairs;
}

// Wilcoxon signed-rank over seed-paired values for every comparison, then
// Benjamini-Hochberg within each metric family.
inline SignificanceReport run_significance(const std::vector<EvalRecord>& records,
                                           const std::vector<std::pair<std::string, std::string>>& pairs,
                                           double q = 0.05) {
  SignificanceReport report;
  report.q = q;
  if (records.empty()) throw std::runtime_error("stats: no records");

  int K = 0;
  std::set<std::string> methods;
  std::map<std::string, std::set<std::uint64_t>> seeds_by_method;
  for (const auto& r : records) {
    K = std::max(K, r.tasks_learned);
    methods.insert(r.method);
    seeds_by_method[r.method].insert(r.seed);
  }
  for (const auto& [a, b] : pairs) {
    for (const auto& m : {a, b})
      if (!methods.count(m)) throw std::runtime_error("stats: no records for method '" + m + "'");
    for (std::uint64_t s : seeds_by_method[a])
      if (!seeds_by_method[b].count(s))
        throw std::runtime_error("stats: unpaired seed: method '" + b + "' is missing seed " +
                                 std::to_string(s));
    for (std::uint64_t s : seeds_by_method[b])
      if (!seeds_by_method[a].count(s))
        throw std::runtime_error("stats: unpaired seed: method '" + a + "' is missing seed " +
                                 std::to_string(s));
  }

  // value lookup: (method, seed, metric, task) -> value at the final stage
  auto final_values = [&](const std::string& method, const std::string& metric, int l) {
    std::map<std::uint64_t, double> by_seed;
    for (const auto& r : records) {
      if (r.method != method || r.tasks_learned != K || r.eval_task != l) continue;
      by_seed[r.seed] = metric == "ia" ? r.ia : metric == "ta" ? r.ta : r.diversity;
    }
    return by_seed;
  };
  const auto tfr_rows = compute_tfr_rows(records);
  auto tfr_values = [&](const std::string& method, const std::string& metric) {
    std::map<std::uint64_t, double> by_seed;
    for (const auto& r : tfr_rows)
      if (r.method == method && r.metric == metric) by_seed[r.seed] = r.value;
    return by_seed;
  };

  auto paired_test = [&](const std::map<std::uint64_t, double>& a,
                         const std::map<std::uint64_t, double>& b, const std::string& who) {
    std::vector<double> va, vb;
    for (const auto& [seed, v] : a) {
      auto it = b.find(seed);
      if (it == b.end())
        throw std::runtime_error("stats: unpaired seed " + std::to_string(seed) + " in " + who);
      va.push_back(v);
      vb.push_back(it->second);
    }
    if (va.size() < 2) throw std::runtime_error("stats: need at least 2 paired seeds in " + who);
    return wilcoxon_signed_rank(va, vb).p;
  };

  for (const std::string metric : {"ia", "ta", "diversity"}) {
    std::vector<SignificanceRow> family;
    for (const auto& [a, b] : pairs)
      for (int l = 1; l <= K; ++l) {
        SignificanceRow row;
        row.comparison = a + "-vs-" + b;
        row.metric = metric;
        row.task = "task" + std::to_string(l);
        row.raw_p = paired_test(final_values(a, metric, l), final_values(b, metric, l),
                                row.comparison + "/" + metric + "/" + row.task);
        family.push_back(std::move(row));
      }
    std::vector<double> ps;
    for (const auto& r : family) ps.push_back(r.raw_p);
    const BHResult bh = benjamini_hochberg(ps, q);
    for (std::size_t i = 0; i < family.size(); ++i) {
      family[i].adjusted_p = bh.adjusted[i];
      family[i].reject = bh.reject[i];
      report.rows.push_back(family[i]);
    }
  }
  for (const std::string metric : {"tfr_ia", "tfr_ta"}) {
    std::vector<SignificanceRow> family;
    for (const auto& [a, b] : pairs) {
      const auto va = tfr_values(a, metric);
      const auto vb = tfr_values(b, metric);
      if (va.empty() || vb.empty()) continue;  // single-stage runs have no forgetting rows
      SignificanceRow row;
      row.comparison = a + "-vs-" + b;
      row.metric = metric;
      row.task = "overall";
      row.raw_p = paired_test(va, vb, row.comparison + "/" + metric);
      family.push_back(std::move(row));
    }
    std::vector<double> ps;
    for (const auto& r : family) ps.push_back(r.raw_p);
    const BHResult bh = benjamini_hochberg(ps, q);
    for (std::size_t i = 0; i < family.size(); ++i) {
      family[i].adjusted_p = bh.adjusted[i];
      family[i].reject = bh.reject[i];
      report.rows.push_back(family[i]);
    }
  }
  return report;
}

inline std::string significance_csv(const SignificanceReport& report) {
  std::ostringstream os;
  os << "comparison,metric,task,raw_p,adj_p,reject\n";
  for (const auto& r : report.rows)
    os << r.comparison << ',' << r.metric << ',' << r.task << ',' << format_number(r.raw_p) << ','
       << format_number(r.adjusted_p) << ',' << (r.reject ? "true" : "false") << "\n";
  return os.str();
}

inline void write_significance(const SignificanceReport& report, const fs::path& out_dir) {
  atomic_write(out_dir / "significance.csv", significance_csv(report));
  nlohmann::json meta;
  meta["q"] = report.q;
  meta["correction"] = "benjamini-hochberg";
  meta["family"] = report.family;
  meta["zero_differences"] = report.zero_policy;
  meta["test"] = "two-sided wilcoxon signed-rank, exact for m <= 20";
  atomic_write(out_dir / "significance_meta.json", meta.dump(2) + "\n");
}

// ---------------------------------------------------------------- report

// Long-format curve data: per metric and method, the across-seed mean and
// std of each (eval_task, tasks_learned) cell. err = 0 when only one seed.
inline std::string curves_csv(const std::vector<EvalRecord>& records,
                              const std::string& order_label) {
  std::ostringstream os;
  os << "metric,method,order,eval_task,tasks_learned,mean,std,n\n";
  std::set<std::string> methods;
  int K = 0;
  for (const auto& r : records) {
    methods.insert(r.method);
    K = std::max(K, r.tasks_learned);
  }
  for (const std::string metric : {"ia", "ta", "diversity"})
    for (const auto& m : methods)
      for (int l = 1; l <= K; ++l)
        for (int k = l; k <= K; ++k) {
          std::vector<double> vals;
          for (const auto& r : records)
            if (r.method == m && r.eval_task == l && r.tasks_learned == k)
              vals.push_back(metric == "ia" ? r.ia : metric == "ta" ? r.ta : r.diversity);
          if (vals.empty()) continue;
          const MeanStd ms = mean_std(vals);
          os << metric << ',' << m << ',' << order_label << ',' << l << ',' << k << ','
             << format_number(ms.mean) << ',' << format_number(ms.stddev.value_or(0.0)) << ','
             << vals.size() << "\n";
        }
  return os.str();
}

// ---------------------------------------------------------------- sweeps

struct SweepPointResult {
  std::string label;
  ExperimentConfig config;
  ExperimentOutput output;
};

struct SweepResult {
  std::string axis;
  std::vector<SweepPointResult> points;
};

inline std::vector<std::string> replay_methods_of(const ExperimentConfig& cfg) {
  std::vector<std::string> out;
  for (const auto& m : cfg.methods)
    if (is_replay(method_from_name(m))) out.push_back(m);
  return out;
}

// One experiment per sweep point. The memory and lambda axes only make
// sense for replay methods, so the method list is filtered for those axes.
inline SweepResult run_sweep(const ExperimentConfig& base, const std::string& axis, int jobs = 1,
                             std::uint64_t seed_offset = 0) {
  SweepResult result;
  result.axis = axis;
  std::vector<ExperimentConfig> points;
  std::vector<std::string> labels;

  if (axis == "lambda") {
    const auto methods = replay_methods_of(base);
    if (methods.empty())
      throw std::runtime_error("sweep lambda: no replay method in the method list");
    for (double l : base.lambda_sweep) {
      ExperimentConfig cfg = base;
      cfg.methods = methods;
      cfg.lambda_memory = l;
      cfg.name = base.name + "_lambda_" + detail::format_double(l);
      points.push_back(std::move(cfg));
      labels.push_back("lambda_" + detail::format_double(l));
    }
  } else if (axis == "memory_size") {
    const auto methods = replay_methods_of(base);
    if (methods.empty())
      throw std::runtime_error("sweep memory_size: no replay method in the method list");
    for (std::uint64_t b : base.memory_sweep_bytes) {
      ExperimentConfig cfg = base;
      cfg.methods = methods;
      cfg.memory_budget_bytes = b;
      cfg.name = base.name + "_budget_" + std::to_string(b);
      points.push_back(std::move(cfg));
      labels.push_back("budget_" + std::to_string(b));
    }
  } else if (axis == "task_order") {
    for (const char* o : {"forward", "reversed"}) {
      ExperimentConfig cfg = base;
      cfg.order = o;
      cfg.name = base.name + "_order_" + o;
      points.push_back(std::move(cfg));
      labels.push_back(std::string("order_") + o);
    }
  } else {
    throw std::runtime_error("unknown sweep axis '" + axis +
                             "' (expected memory_size, lambda or task_order)");
  }

  for (std::size_t i = 0; i < points.size(); ++i) {
    SweepPointResult point;
    point.label = labels[i];
    point.config = points[i];
    point.output = run_experiment(points[i], jobs, seed_offset);
    result.points.push_back(std::move(point));
  }
  return result;
}

// Cross-point summary: forgetting rates plus the final-stage scores of the
// first and last task, per method, at every sweep point.
inline std::string sweep_summary_csv(const SweepResult& sweep) {
  std::ostringstream os;
  os << "axis,point,method,metric,mean,std,n\n";
  for (const auto& point : sweep.points) {
    const int K = point.config.tasks;
    std::map<std::string, std::map<std::string, std::vector<double>>> values;
    for (const auto& row : compute_tfr_rows(point.output.records))
      values[row.method][row.metric].push_back(row.value);
    for (const auto& r : point.output.records) {
      if (r.tasks_learned != K) continue;
      if (r.eval_task == K) values[r.method]["final_task_ia"].push_back(r.ia);
      if (r.eval_task == 1) {
        values[r.method]["first_task_ia"].push_back(r.ia);
        values[r.method]["first_task_diversity"].push_back(r.diversity);
      }
    }
    for (const auto& [method, metrics] : values)
      for (const auto& [metric, vals] : metrics) {
        const MeanStd ms = mean_std(vals);
        os << sweep.axis << ',' << point.label << ',' << method << ',' << metric << ','
           << format_number(ms.mean) << ',' << format_number(ms.stddev.value_or(0.0)) << ','
           << vals.size() << "\n";
      }
  }
  return os.str();
}

inline void write_sweep_files(const SweepResult& sweep, const fs::path& out_root) {
  for (const auto& point : sweep.points)
    write_experiment_files(point.config, point.output, out_root / point.label);
  atomic_write(out_root / "sweep_summary.csv", sweep_summary_csv(sweep));
}

}  // namespace replab

#endif  // REPLAB_HARNESS_HPP
