#ifndef REPLAB_REPLAY_HPP
#define REPLAB_REPLAY_HPP

#include <algorithm>
#include <cstdint>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "replab/matrix.hpp"
#include "replab/rng.hpp"

namespace replab {

// Storage accounting runs at 4 bytes per scalar (float32 payloads) no matter
// what precision the compute path uses.
inline constexpr std::uint64_t kBytesPerScalar = 4;

struct ReplayItem {
  Vec payload;  // raw data vector or latent code
  Vec cond;     // condition embedding the sample was trained with
  int task_id = 0;

  std::uint64_t bytes() const { return payload.size() * kBytesPerScalar; }
};

// Fixed-capacity reservoir over a stream of replay items. After N >= capacity
// offers every offered item is retained with probability capacity/N.
class MemoryBuffer {
 public:
  explicit MemoryBuffer(std::size_t capacity) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  std::uint64_t seen() const { return seen_; }
  const std::vector<ReplayItem>& items() const { return items_; }

  void offer(ReplayItem item, Rng& rng) {
    ++seen_;
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
      return;
    }
    if (capacity_ == 0) return;
    const std::uint64_t j = rng.uniform_int(seen_);
    if (j < capacity_) items_[static_cast<std::size_t>(j)] = std::move(item);
  }

  // k independent uniform draws with replacement.
  std::vector<ReplayItem> retrieve_uniform(std::size_t k, Rng& rng) const {
    if (items_.empty()) throw std::runtime_error("MemoryBuffer: retrieval from empty buffer");
    std::vector<ReplayItem> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i)
      out.push_back(items_[static_cast<std::size_t>(rng.uniform_int(items_.size()))]);
    return out;
  }

  // Top-k by cosine similarity to the query, ties broken by lower insertion
  // index. Zero-norm stored payloads rank below everything else.
  std::vector<ReplayItem> retrieve_topk_similar(const Vec& query, std::size_t k) const {
    if (items_.empty()) throw std::runtime_error("MemoryBuffer: retrieval from empty buffer");
    const double qn = norm(query);
    if (qn == 0.0) throw std::invalid_argument("MemoryBuffer: zero-norm query");
    std::vector<std::pair<double, std::size_t>> scored;
    scored.reserve(items_.size());
    for (std::size_t i = 0; i < items_.size(); ++i) {
      const double pn = norm(items_[i].payload);
      const double sim = (pn == 0.0) ? -std::numeric_limits<double>::infinity()
                                     : dot(items_[i].payload, query) / (pn * qn);
      scored.emplace_back(sim, i);
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    const std::size_t take = std::min(k, scored.size());
    std::vector<ReplayItem> out;
    out.reserve(take);
    for (std::size_t i = 0; i < take; ++i) out.push_back(items_[scored[i].second]);
    return out;
  }

  // One JSON object per line: task id, payload, condition.
  void dump_jsonl(std::ostream& os) const {
    for (const auto& item : items_) {
      nlohmann::json j;
      j["task_id"] = item.task_id;
      j["payload"] = item.payload;
      j["cond"] = item.cond;
      os << j.dump() << '\n';
    }
  }

 private:
  std::size_t capacity_;
  std::vector<ReplayItem> items_;
  std::uint64_t seen_ = 0;
};

// Mean of the batch latents, the retrieval query for similarity-based replay.
inline Vec form_query(const std::vector<Vec>& batch_latents) {
  if (batch_latents.empty()) throw std::invalid_argument("form_query: empty batch");
  Vec q(batch_latents.front().size(), 0.0);
  for (const auto& z : batch_latents) axpy(1.0, z, q);
  for (auto& x : q) x /= static_cast<double>(batch_latents.size());
  return q;
}

struct MemoryAccounting {
  std::uint64_t total_bytes = 0;
  std::vector<std::uint64_t> per_item_bytes;
  std::size_t item_count = 0;
};

inline MemoryAccounting account_memory(const MemoryBuffer& buffer) {
  MemoryAccounting acc;
  acc.item_count = buffer.size();
  acc.per_item_bytes.reserve(buffer.size());
  for (const auto& item : buffer.items()) {
    acc.per_item_bytes.push_back(item.bytes());
    acc.total_bytes += item.bytes();
  }
  return acc;
}

struct BudgetCapacities {
  std::size_t raw_capacity = 0;     // items when storing raw samples
  std::size_t latent_capacity = 0;  // items when storing latent codes
  bool underflow = false;           // budget too small for even one item
};

// Floor division of a shared byte budget by the per-item cost of each
// representation.
inline BudgetCapacities equal_budget_capacities(std::uint64_t budget_bytes,
                                                std::uint64_t raw_item_bytes,
                                                std::uint64_t latent_item_bytes) {
  if (raw_item_bytes == 0 || latent_item_bytes == 0)
    throw std::invalid_argument("equal_budget_capacities: zero item size");
  BudgetCapacities c;
  c.raw_capacity = static_cast<std::size_t>(budget_bytes / raw_item_bytes);
  c.latent_capacity = static_cast<std::size_t>(budget_bytes / latent_item_bytes);
  c.underflow = (c.raw_capacity == 0 || c.latent_capacity == 0);
  return c;
}

}  // namespace replab

#endif  // REPLAB_REPLAY_HPP
