#ifndef REPLAB_CONFIG_HPP
#define REPLAB_CONFIG_HPP

#include <charconv>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "replab/continual.hpp"

namespace replab {

struct config_error : std::runtime_error {
  std::string field;
  config_error(const std::string& f, const std::string& msg)
      : std::runtime_error("config field '" + f + "': " + msg), field(f) {}
};

// The experiment record: everything a run needs, stored as a flat versioned
// key-value text file. Unknown keys are rejected so typos cannot silently
// fall back to defaults.
struct ExperimentConfig {
  int schema_version = 1;
  std::string name = "default";
  int seeds = 10;
  std::uint64_t seed_base = 100;
  std::vector<std::string> methods = {"naive", "er", "lr", "slr", "offline"};
  std::string order = "forward";  // forward | reversed | explicit "2,0,1,..."

  // task suite
  int tasks = 5;
  int data_dim = 64;
  int latent_dim = 8;
  int cond_dim = 8;
  int feature_dim = 32;
  int components_per_task = 2;
  double concept_radius = 2.5;
  double component_spread = 0.6;
  double noise_std = 0.25;
  int prompt_variants = 20;
  double prompt_offset_scale = 0.1;
  std::uint64_t suite_seed = 1234;

  // diffusion + model
  int schedule_steps = 100;
  int time_dim = 8;
  int hidden_dim = 64;
  int hidden_layers = 3;

  // training protocol
  int n_train = 48;
  int n_eval = 10;
  double lambda_memory = 0.5;
  std::uint64_t memory_budget_bytes = 2560;
  int retrieval_k = 4;
  double learning_rate = 2e-3;
  double weight_decay = 1e-2;
  int max_steps = 1600;
  int min_steps = 100;
  int grad_accum = 4;
  int warmup_steps = 50;
  int max_retries = 5;
  double early_stop_loss = 0.05;
  int ema_window = 50;

  // sweep axes
  std::vector<double> lambda_sweep = {0.1, 0.3, 0.5, 0.7, 0.9};
  std::vector<std::uint64_t> memory_sweep_bytes = {2560, 5120, 25600};

  bool dump_buffers = false;

  static ExperimentConfig parse(const std::string& text);
  std::string serialize() const;
  std::string hash() const;
  void validate() const;

  TaskSuiteParams suite_params() const {
    TaskSuiteParams p;
    p.n_tasks = tasks;
    p.data_dim = data_dim;
    p.latent_dim = latent_dim;
    p.cond_dim = cond_dim;
    p.feature_dim = feature_dim;
    p.components_per_task = components_per_task;
    p.concept_radius = concept_radius;
    p.component_spread = component_spread;
    p.noise_std = noise_std;
    p.prompt_variants = prompt_variants;
    p.prompt_offset_scale = prompt_offset_scale;
    p.seed = suite_seed;
    return p;
  }

  RunSpec run_spec(Method m) const {
    RunSpec spec;
    spec.method = MethodConfig::defaults_for(m);
    spec.method.lambda_memory = lambda_memory;
    spec.method.memory_budget_bytes = memory_budget_bytes;
    spec.method.retrieval_k = retrieval_k;
    spec.method.max_retries = max_retries;
    spec.method.min_steps = min_steps;
    spec.method.max_steps = max_steps;
    spec.method.grad_accum = grad_accum;
    spec.method.warmup_steps = warmup_steps;
    spec.method.early_stop_ema = early_stop_loss;
    spec.method.ema_window = ema_window;
    spec.method.optimizer.lr = learning_rate;
    spec.method.optimizer.weight_decay = weight_decay;
    spec.net.latent_dim = latent_dim;
    spec.net.cond_dim = cond_dim;
    spec.net.time_dim = time_dim;
    spec.net.hidden_dim = hidden_dim;
    spec.net.hidden_layers = hidden_layers;
    spec.schedule = DiffusionSchedule::linear(schedule_steps);
    spec.n_train = n_train;
    spec.n_eval = n_eval;
    return spec;
  }

  std::vector<int> task_order() const {
    std::vector<int> o;
    if (order == "forward") {
      for (int i = 0; i < tasks; ++i) o.push_back(i);
    } else if (order == "reversed") {
      for (int i = tasks - 1; i >= 0; --i) o.push_back(i);
    } else {
      std::stringstream ss(order);
      std::string item;
      while (std::getline(ss, item, ',')) o.push_back(std::stoi(item));
      std::vector<bool> seen(tasks, false);
      if (static_cast<int>(o.size()) != tasks)
        throw config_error("order", "explicit order must list every task once");
      for (int i : o) {
        if (i < 0 || i >= tasks || seen[i])
          throw config_error("order", "explicit order must be a permutation of 0..tasks-1");
        seen[i] = true;
      }
    }
    return o;
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& field, const std::string& value) {
  T out{};
  const std::string v = trim(value);
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size())
    throw config_error(field, "cannot parse '" + v + "'");
  return out;
}

// from_chars for double is available, but keep one code path for all numbers
template <>
inline double parse_number<double>(const std::string& field, const std::string& value) {
  const std::string v = trim(value);
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing characters");
    return out;
  } catch (const std::exception&) {
    throw config_error(field, "cannot parse '" + v + "'");
  }
}

inline std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) parts.push_back(t);
  }
  return parts;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace detail

inline ExperimentConfig ExperimentConfig::parse(const std::string& text) {
  ExperimentConfig cfg;
  std::map<std::string, std::string> kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash_pos = line.find('#');
    if (hash_pos != std::string::npos) line = line.substr(0, hash_pos);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("(line " + std::to_string(lineno) + ")", "expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (kv.count(key)) throw config_error(key, "duplicate key");
    kv[key] = value;
  }

  auto take = [&](const char* key) -> std::string* {
    auto it = kv.find(key);
    if (it == kv.end()) return nullptr;
    return &it->second;
  };
  auto num_int = [&](const char* key, int& slot) {
    if (auto* v = take(key)) slot = detail::parse_number<int>(key, *v);
  };
  auto num_u64 = [&](const char* key, std::uint64_t& slot) {
    if (auto* v = take(key)) slot = detail::parse_number<std::uint64_t>(key, *v);
  };
  auto num_double = [&](const char* key, double& slot) {
    if (auto* v = take(key)) slot = detail::parse_number<double>(key, *v);
  };

  if (auto* v = take("schema_version")) cfg.schema_version = detail::parse_number<int>("schema_version", *v);
  if (cfg.schema_version != 1) throw config_error("schema_version", "unsupported version");
  if (auto* v = take("name")) cfg.name = *v;
  num_int("seeds", cfg.seeds);
  num_u64("seed_base", cfg.seed_base);
  if (auto* v = take("methods")) cfg.methods = detail::split_list(*v);
  if (auto* v = take("order")) cfg.order = *v;
  num_int("tasks", cfg.tasks);
  num_int("data_dim", cfg.data_dim);
  num_int("latent_dim", cfg.latent_dim);
  num_int("cond_dim", cfg.cond_dim);
  num_int("feature_dim", cfg.feature_dim);
  num_int("components_per_task", cfg.components_per_task);
  num_double("concept_radius", cfg.concept_radius);
  num_double("component_spread", cfg.component_spread);
  num_double("noise_std", cfg.noise_std);
  num_int("prompt_variants", cfg.prompt_variants);
  num_double("prompt_offset_scale", cfg.prompt_offset_scale);
  num_u64("suite_seed", cfg.suite_seed);
  num_int("schedule_steps", cfg.schedule_steps);
  num_int("time_dim", cfg.time_dim);
  num_int("hidden_dim", cfg.hidden_dim);
  num_int("hidden_layers", cfg.hidden_layers);
  num_int("n_train", cfg.n_train);
  num_int("n_eval", cfg.n_eval);
  num_double("lambda_memory", cfg.lambda_memory);
  num_u64("memory_budget_bytes", cfg.memory_budget_bytes);
  num_int("retrieval_k", cfg.retrieval_k);
  num_double("learning_rate", cfg.learning_rate);
  num_double("weight_decay", cfg.weight_decay);
  num_int("max_steps", cfg.max_steps);
  num_int("min_steps", cfg.min_steps);
  num_int("grad_accum", cfg.grad_accum);
  num_int("warmup_steps", cfg.warmup_steps);
  num_int("max_retries", cfg.max_retries);
  num_double("early_stop_loss", cfg.early_stop_loss);
  num_int("ema_window", cfg.ema_window);
  if (auto* v = take("lambda_sweep")) {
    cfg.lambda_sweep.clear();
    for (const auto& s : detail::split_list(*v))
      cfg.lambda_sweep.push_back(detail::parse_number<double>("lambda_sweep", s));
  }
  if (auto* v = take("memory_sweep_bytes")) {
    cfg.memory_sweep_bytes.clear();
    for (const auto& s : detail::split_list(*v))
      cfg.memory_sweep_bytes.push_back(detail::parse_number<std::uint64_t>("memory_sweep_bytes", s));
  }
  if (auto* v = take("dump_buffers")) {
    if (*v == "true")
      cfg.dump_buffers = true;
    else if (*v == "false")
      cfg.dump_buffers = false;
    else
      throw config_error("dump_buffers", "expected true or false");
  }

  static const char* known[] = {
      "schema_version", "name", "seeds", "seed_base", "methods", "order", "tasks", "data_dim",
      "latent_dim", "cond_dim", "feature_dim", "components_per_task", "concept_radius",
      "component_spread", "noise_std", "prompt_variants", "prompt_offset_scale", "suite_seed",
      "schedule_steps", "time_dim", "hidden_dim", "hidden_layers", "n_train", "n_eval",
      "lambda_memory", "memory_budget_bytes", "retrieval_k", "learning_rate", "weight_decay",
      "max_steps", "min_steps", "grad_accum", "warmup_steps", "max_retries", "early_stop_loss",
      "ema_window", "lambda_sweep", "memory_sweep_bytes", "dump_buffers"};
  for (const auto& [key, value] : kv) {
    bool ok = false;
    for (const char* k : known)
      if (key == k) ok = true;
    if (!ok) throw config_error(key, "unknown key");
  }

  cfg.validate();
  return cfg;
}

inline void ExperimentConfig::validate() const {
  auto require = [](bool ok, const char* field, const char* msg) {
    if (!ok) throw config_error(field, msg);
  };
  require(seeds >= 1, "seeds", "must be >= 1");
  require(!methods.empty(), "methods", "must name at least one method");
  for (const auto& m : methods) {
    try {
      method_from_name(m);
    } catch (const std::exception&) {
      throw config_error("methods", "unknown method '" + m + "'");
    }
  }
  require(tasks >= 1, "tasks", "must be >= 1");
  require(data_dim >= 1, "data_dim", "must be >= 1");
  require(latent_dim >= 1 && latent_dim <= data_dim, "latent_dim", "must be in [1, data_dim]");
  require(cond_dim >= 1, "cond_dim", "must be >= 1");
  require(feature_dim >= 1, "feature_dim", "must be >= 1");
  require(components_per_task >= 1, "components_per_task", "must be >= 1");
  require(noise_std >= 0.0, "noise_std", "must be >= 0");
  require(prompt_variants >= 1, "prompt_variants", "must be >= 1");
  require(schedule_steps >= 2, "schedule_steps", "must be >= 2");
  require(time_dim >= 0 && time_dim % 2 == 0, "time_dim", "must be even and >= 0");
  require(hidden_dim >= 1, "hidden_dim", "must be >= 1");
  require(hidden_layers >= 0, "hidden_layers", "must be >= 0");
  require(n_train >= 1, "n_train", "must be >= 1");
  require(n_eval >= 1, "n_eval", "must be >= 1");
  require(lambda_memory >= 0.0 && lambda_memory <= 1.0, "lambda_memory", "must be in [0,1]");
  require(retrieval_k >= 1, "retrieval_k", "must be >= 1");
  require(learning_rate > 0.0, "learning_rate", "must be > 0");
  require(weight_decay >= 0.0, "weight_decay", "must be >= 0");
  require(max_steps >= 1, "max_steps", "must be >= 1");
  require(min_steps >= 0 && min_steps <= max_steps, "min_steps", "must be in [0, max_steps]");
  require(grad_accum >= 1, "grad_accum", "must be >= 1");
  require(warmup_steps >= 0, "warmup_steps", "must be >= 0");
  require(max_retries >= 0, "max_retries", "must be >= 0");
  require(ema_window >= 1, "ema_window", "must be >= 1");
  for (double l : lambda_sweep)
    require(l >= 0.0 && l <= 1.0, "lambda_sweep", "entries must be in [0,1]");
  require(!memory_sweep_bytes.empty(), "memory_sweep_bytes", "must not be empty");
  task_order();  // validates the order string
}

inline std::string ExperimentConfig::serialize() const {
  std::ostringstream os;
  os << "schema_version = " << schema_version << "\n";
  os << "name = " << name << "\n";
  os << "seeds = " << seeds << "\n";
  os << "seed_base = " << seed_base << "\n";
  os << "methods = ";
  for (std::size_t i = 0; i < methods.size(); ++i) os << (i ? "," : "") << methods[i];
  os << "\n";
  os << "order = " << order << "\n";
  os << "tasks = " << tasks << "\n";
  os << "data_dim = " << data_dim << "\n";
  os << "latent_dim = " << latent_dim << "\n";
  os << "cond_dim = " << cond_dim << "\n";
  os << "feature_dim = " << feature_dim << "\n";
  os << "components_per_task = " << components_per_task << "\n";
  os << "concept_radius = " << detail::format_double(concept_radius) << "\n";
  os << "component_spread = " << detail::format_double(component_spread) << "\n";
  os << "noise_std = " << detail::format_double(noise_std) << "\n";
  os << "prompt_variants = " << prompt_variants << "\n";
  os << "prompt_offset_scale = " << detail::format_double(prompt_offset_scale) << "\n";
  os << "suite_seed = " << suite_seed << "\n";
  os << "schedule_steps = " << schedule_steps << "\n";
  os << "time_dim = " << time_dim << "\n";
  os << "hidden_dim = " << hidden_dim << "\n";
  os << "hidden_layers = " << hidden_layers << "\n";
  os << "n_train = " << n_train << "\n";
  os << "n_eval = " << n_eval << "\n";
  os << "lambda_memory = " << detail::format_double(lambda_memory) << "\n";
  os << "memory_budget_bytes = " << memory_budget_bytes << "\n";
  os << "retrieval_k = " << retrieval_k << "\n";
  os << "learning_rate = " << detail::format_double(learning_rate) << "\n";
  os << "weight_decay = " << detail::format_double(weight_decay) << "\n";
  os << "max_steps = " << max_steps << "\n";
  os << "min_steps = " << min_steps << "\n";
  os << "grad_accum = " << grad_accum << "\n";
  os << "warmup_steps = " << warmup_steps << "\n";
  os << "max_retries = " << max_retries << "\n";
  os << "early_stop_loss = " << detail::format_double(early_stop_loss) << "\n";
  os << "ema_window = " << ema_window << "\n";
  os << "lambda_sweep = ";
  for (std::size_t i = 0; i < lambda_sweep.size(); ++i)
    os << (i ? "," : "") << detail::format_double(lambda_sweep[i]);
  os << "\n";
  os << "memory_sweep_bytes = ";
  for (std::size_t i = 0; i < memory_sweep_bytes.size(); ++i)
    os << (i ? "," : "") << memory_sweep_bytes[i];
  os << "\n";
  os << "dump_buffers = " << (dump_buffers ? "true" : "false") << "\n";
  return os.str();
}

inline std::string ExperimentConfig::hash() const {
  // FNV-1a over the canonical serialization
  const std::string s = serialize();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  static const char* hex = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = hex[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return std::string(buf);
}

}  // namespace replab

#endif  // REPLAB_CONFIG_HPP
