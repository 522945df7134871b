#ifndef REPLAB_METRICS_HPP
#define REPLAB_METRICS_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "replab/matrix.hpp"

namespace replab {

struct AlignmentResult {
  double value = 0.0;
  int used = 0;
  int excluded = 0;  // zero-norm features dropped before averaging
};

// Mean cosine similarity over all (generated, reference) pairs.
inline AlignmentResult image_alignment(const std::vector<Vec>& generated,
                                       const std::vector<Vec>& reference) {
  if (generated.empty() || reference.empty())
    throw std::invalid_argument("image_alignment: empty feature set");
  AlignmentResult r;
  double sum = 0.0;
  for (const auto& g : generated) {
    const double gn = norm(g);
    if (gn == 0.0) {
      ++r.excluded;
      continue;
    }
    for (const auto& ref : reference) {
      const double rn = norm(ref);
      if (rn == 0.0) {
        ++r.excluded;
        continue;
      }
      sum += dot(g, ref) / (gn * rn);
      ++r.used;
    }
  }
  if (r.used == 0) throw std::runtime_error("image_alignment: all pairs excluded");
  r.value = sum / r.used;
  return r;
}

// Mean cosine similarity between each generated feature and the prompt's
// feature projection.
inline AlignmentResult text_alignment(const std::vector<Vec>& generated,
                                      const Vec& prompt_feature) {
  if (generated.empty()) throw std::invalid_argument("text_alignment: empty feature set");
  const double pn = norm(prompt_feature);
  if (pn == 0.0) throw std::invalid_argument("text_alignment: zero-norm prompt feature");
  AlignmentResult r;
  double sum = 0.0;
  for (const auto& g : generated) {
    const double gn = norm(g);
    if (gn == 0.0) {
      ++r.excluded;
      continue;
    }
    sum += dot(g, prompt_feature) / (gn * pn);
    ++r.used;
  }
  if (r.used == 0) throw std::runtime_error("text_alignment: all features excluded");
  r.value = sum / r.used;
  return r;
}

// Symmetric pairwise-similarity matrix with unit diagonal, entries in [0,1].
struct SimilarityKernel {
  int n = 0;
  Vec k;  // row-major n*n

  double at(int i, int j) const { return k[static_cast<std::size_t>(i) * n + j]; }
  double& at(int i, int j) { return k[static_cast<std::size_t>(i) * n + j]; }

  // Builds k(a,b) = (1 + cos(a,b)) / 2 over the distinct support of the set:
  // exact duplicates are collapsed first, so the derived diversity score
  // counts distinct modes and repeated samples cannot raise it. Zero-norm
  // features are dropped and counted so callers can surface the exclusion.
  static SimilarityKernel from_features(const std::vector<Vec>& feats, int* excluded = nullptr) {
    std::vector<const Vec*> kept;
    std::vector<double> norms;
    int dropped = 0;
    for (const auto& f : feats) {
      const double nf = norm(f);
      if (nf == 0.0) {
        ++dropped;
        continue;
      }
      bool duplicate = false;
      for (const Vec* seen : kept)
        if (*seen == f) {
          duplicate = true;
          break;
        }
      if (duplicate) continue;
      kept.push_back(&f);
      norms.push_back(nf);
    }
    if (excluded) *excluded = dropped;
    SimilarityKernel kern;
    kern.n = static_cast<int>(kept.size());
    kern.k.assign(static_cast<std::size_t>(kern.n) * kern.n, 0.0);
    for (int i = 0; i < kern.n; ++i) {
      kern.at(i, i) = 1.0;
      for (int j = i + 1; j < kern.n; ++j) {
        const double c = dot(*kept[i], *kept[j]) / (norms[i] * norms[j]);
        const double v = 0.5 * (1.0 + c);
        kern.at(i, j) = v;
        kern.at(j, i) = v;
      }
    }
    return kern;
  }
};

struct VendiScores {
  double score = 0.0;        // local-density form (primary)
  double eigen_score = 0.0;  // eigenvalue-entropy form (reference)
  int n = 0;
};

// Diversity of a sample set, two formulations over the same kernel:
//  - local density: d_i = row mean of K, score = exp(-(1/n) sum log d_i)
//  - eigenvalue entropy: score = exp(-sum lambda log lambda) for the
//    eigenvalues of K/n
// Both equal 1 on identical sets and n when all off-diagonal similarity
// vanishes.
inline VendiScores vendi_from_kernel(const SimilarityKernel& kern) {
  if (kern.n == 0) throw std::runtime_error("vendi: no usable samples");
  VendiScores out;
  out.n = kern.n;
  const int n = kern.n;
  double log_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    double row = 0.0;
    for (int j = 0; j < n; ++j) row += kern.at(i, j);
    const double d = row / n;
    log_sum += std::log(d);
  }
  out.score = std::exp(-log_sum / n);

  Matrix m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m.at(i, j) = kern.at(i, j) / n;
  const Vec ev = symmetric_eigenvalues(std::move(m));
  double entropy = 0.0;
  for (double lambda : ev) {
    if (lambda > 1e-15) entropy -= lambda * std::log(lambda);
  }
  out.eigen_score = std::exp(entropy);
  return out;
}

inline VendiScores vendi_score(const std::vector<Vec>& feats) {
  if (feats.empty()) throw std::invalid_argument("vendi_score: empty sample set");
  int excluded = 0;
  const SimilarityKernel kern = SimilarityKernel::from_features(feats, &excluded);
  return vendi_from_kernel(kern);
}

// One evaluation cell: metrics for task `eval_task` measured after
// `tasks_learned` tasks have been trained.
struct EvalRecord {
  std::string method;
  std::uint64_t seed = 0;
  int tasks_learned = 0;  // k, 1-based
  int eval_task = 0;      // l, 1-based sequence position, l <= k
  double ia = 0.0;
  double ta = 0.0;
  double diversity = 0.0;
  double diversity_eigen = 0.0;
};

// Lower-triangular metric matrix M[k][l] for 1 <= l <= k <= max_k.
class MetricMatrix {
 public:
  explicit MetricMatrix(int max_k) : max_k_(max_k), cells_(index(max_k, max_k) + 1) {}

  void set(int k, int l, double v) {
    check(k, l);
    cells_[index(k, l)] = v;
  }

  bool has(int k, int l) const { return k >= 1 && l >= 1 && l <= k && k <= max_k_ && cells_[index(k, l)].has_value(); }

  double get(int k, int l) const {
    check(k, l);
    const auto& c = cells_[index(k, l)];
    if (!c) throw std::runtime_error("MetricMatrix: missing cell");
    return *c;
  }

  int max_k() const { return max_k_; }

 private:
  static std::size_t index(int k, int l) {
    return static_cast<std::size_t>(k - 1) * k / 2 + (l - 1);
  }
  void check(int k, int l) const {
    if (k < 1 || l < 1 || l > k || k > max_k_)
      throw std::invalid_argument("MetricMatrix: index out of range");
  }
  int max_k_;
  std::vector<std::optional<double>> cells_;
};

// Mean drop on earlier tasks between just-after-learning and after task k:
//   (1/(k-1)) * sum_{l<k} ( M[l,l] - M[k,l] )
// Positive values mean forgetting, negative backward transfer. Undefined for
// k < 2.
inline std::optional<double> tfr(const MetricMatrix& m, int k) {
  if (k < 2) return std::nullopt;
  double sum = 0.0;
  for (int l = 1; l < k; ++l) sum += m.get(l, l) - m.get(k, l);
  return sum / (k - 1);
}

}  // namespace replab

#endif  // REPLAB_METRICS_HPP
