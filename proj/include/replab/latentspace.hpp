#ifndef REPLAB_LATENTSPACE_HPP
#define REPLAB_LATENTSPACE_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "replab/matrix.hpp"
#include "replab/rng.hpp"

namespace replab {

// Frozen linear codec: encode = A^T x with A^T having orthonormal rows, so
// encode(decode(z)) = z exactly and decode(encode(x)) is the orthogonal
// projection of x onto span(A).
class FrozenCodec {
 public:
  static FrozenCodec seeded(int data_dim, int latent_dim, Rng& rng) {
    if (latent_dim < 1 || latent_dim > data_dim)
      throw std::invalid_argument("FrozenCodec: latent_dim must be in [1, data_dim]");
    FrozenCodec c;
    c.encode_ = orthonormal_rows(latent_dim, data_dim, rng);
    return c;
  }

  int data_dim() const { return encode_.cols; }
  int latent_dim() const { return encode_.rows; }
  double compression_ratio() const {
    return static_cast<double>(data_dim()) / static_cast<double>(latent_dim());
  }

  Vec encode(const Vec& x) const {
    if (static_cast<int>(x.size()) != data_dim())
      throw std::invalid_argument("FrozenCodec::encode: dimension mismatch");
    return matvec(encode_, x);
  }

  Vec decode(const Vec& z) const {
    if (static_cast<int>(z.size()) != latent_dim())
      throw std::invalid_argument("FrozenCodec::decode: dimension mismatch");
    return matvec_t(encode_, z);
  }

  const Matrix& encode_matrix() const { return encode_; }

 private:
  Matrix encode_;  // latent_dim x data_dim, orthonormal rows
};

// Frozen seeded feature map standing in for a pretrained image/text encoder:
// a 2-layer tanh net for data vectors plus a linear map for condition
// embeddings into the same feature space. Never updated by training.
class FeatureEmbedder {
 public:
  static FeatureEmbedder seeded(int data_dim, int cond_dim, int feature_dim, Rng& rng,
                                int hidden_dim = 48) {
    FeatureEmbedder e;
    e.w1_ = Matrix::seeded_gaussian(hidden_dim, data_dim, std::sqrt(1.0 / data_dim), rng);
    e.b1_ = rng.normal_vec(hidden_dim);
    for (auto& x : e.b1_) x *= 0.1;
    e.w2_ = Matrix::seeded_gaussian(feature_dim, hidden_dim, std::sqrt(1.0 / hidden_dim), rng);
    e.b2_ = rng.normal_vec(feature_dim);
    for (auto& x : e.b2_) x *= 0.1;
    e.cond_map_ = Matrix::seeded_gaussian(feature_dim, cond_dim, std::sqrt(1.0 / cond_dim), rng);
    return e;
  }

  int data_dim() const { return w1_.cols; }
  int cond_dim() const { return cond_map_.cols; }
  int feature_dim() const { return w2_.rows; }

  Vec embed(const Vec& x) const {
    if (static_cast<int>(x.size()) != data_dim())
      throw std::invalid_argument("FeatureEmbedder::embed: dimension mismatch");
    Vec h = matvec(w1_, x);
    axpy(1.0, b1_, h);
    for (auto& v : h) v = std::tanh(v);
    Vec f = matvec(w2_, h);
    axpy(1.0, b2_, f);
    return f;
  }

  Vec embed_condition(const Vec& cond) const {
    if (static_cast<int>(cond.size()) != cond_dim())
      throw std::invalid_argument("FeatureEmbedder::embed_condition: dimension mismatch");
    return matvec(cond_map_, cond);
  }

  // Fit the condition map once so concept embeddings land near their
  // concepts' mean data features (ridge least squares). Mirrors the way a
  // pretrained text encoder is already aligned with its image encoder.
  // Called at suite construction; the map is frozen afterwards.
  void calibrate_condition_map(const std::vector<Vec>& cond_embeddings,
                               const std::vector<Vec>& target_features, double ridge = 1e-6) {
    const int n = static_cast<int>(cond_embeddings.size());
    if (n == 0 || static_cast<int>(target_features.size()) != n)
      throw std::invalid_argument("calibrate_condition_map: bad inputs");
    const int cd = cond_dim();
    const int fd = feature_dim();
    Matrix gram(cd, cd);
    for (int i = 0; i < cd; ++i)
      for (int j = 0; j < cd; ++j) {
        double s = (i == j) ? ridge : 0.0;
        for (int k = 0; k < n; ++k) s += cond_embeddings[k][i] * cond_embeddings[k][j];
        gram.at(i, j) = s;
      }
    for (int r = 0; r < fd; ++r) {
      Vec rhs(cd, 0.0);
      for (int k = 0; k < n; ++k)
        for (int i = 0; i < cd; ++i) rhs[i] += cond_embeddings[k][i] * target_features[k][r];
      const Vec row = cholesky_solve_spd(gram, rhs);
      for (int i = 0; i < cd; ++i) cond_map_.at(r, i) = row[i];
    }
  }

 private:
  Matrix w1_;
  Vec b1_;
  Matrix w2_;
  Vec b2_;
  Matrix cond_map_;
};

struct MixtureComponent {
  Vec mean;
  Vec stddev;  // per-coordinate; zero entries collapse that coordinate
  double weight = 1.0;
};

// A synthetic generative concept: a mixture in data space plus a concept
// embedding and a set of prompt-variant offsets applied to it.
struct ConceptTask {
  int id = 0;
  std::vector<MixtureComponent> components;
  Vec concept_embedding;
  std::vector<Vec> prompt_offsets;

  // Evaluation prompt: the bare concept embedding.
  const Vec& condition() const { return concept_embedding; }

  // Training prompt variant (cycled over the offset pool).
  Vec condition(int variant) const {
    if (prompt_offsets.empty()) return concept_embedding;
    const Vec& off = prompt_offsets[static_cast<std::size_t>(variant) % prompt_offsets.size()];
    Vec c = concept_embedding;
    axpy(1.0, off, c);
    return c;
  }

  Vec sample_one(Rng& rng) const {
    // pick component by weight, then mean + stddev .* xi
    double u = rng.uniform01();
    std::size_t pick = components.size() - 1;
    for (std::size_t c = 0; c < components.size(); ++c) {
      if (u < components[c].weight) {
        pick = c;
        break;
      }
      u -= components[c].weight;
    }
    const MixtureComponent& comp = components[pick];
    Vec x = comp.mean;
    for (std::size_t i = 0; i < x.size(); ++i) x[i] += comp.stddev[i] * rng.normal();
    return x;
  }

  void validate() const {
    if (components.empty()) throw std::invalid_argument("ConceptTask: no components");
    double wsum = 0.0;
    for (const auto& c : components) {
      if (c.mean.size() != components.front().mean.size() || c.stddev.size() != c.mean.size())
        throw std::invalid_argument("ConceptTask: component shape mismatch");
      if (c.weight < 0.0) throw std::invalid_argument("ConceptTask: negative weight");
      for (double s : c.stddev)
        if (s < 0.0) throw std::invalid_argument("ConceptTask: negative stddev");
      wsum += c.weight;
    }
    if (std::abs(wsum - 1.0) > 1e-9) throw std::invalid_argument("ConceptTask: weights must sum to 1");
  }
};

inline std::vector<Vec> sample_task_data(const ConceptTask& task, int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_task_data: n must be >= 1");
  std::vector<Vec> xs;
  xs.reserve(n);
  for (int i = 0; i < n; ++i) xs.push_back(task.sample_one(rng));
  return xs;
}

struct TaskSuiteParams {
  int n_tasks = 5;
  int data_dim = 64;
  int latent_dim = 8;
  int cond_dim = 8;
  int feature_dim = 32;
  int components_per_task = 2;
  double concept_radius = 2.5;     // latent-space norm of concept centers
  double component_spread = 0.6;   // latent-space offset of components from the center
  double noise_std = 0.25;         // per-coordinate data-space sample noise
  int prompt_variants = 20;
  double prompt_offset_scale = 0.1;  // relative to the concept embedding norm
  std::uint64_t seed = 1234;
};

// n points of a regular simplex (unit circumradius) mapped through the given
// orthonormal direction rows ((n-1) x dim). n = 1 degenerates to the origin.
inline std::vector<Vec> simplex_points(int n, const Matrix& basis_rows) {
  const int dim = basis_rows.cols;
  std::vector<Vec> pts(n, Vec(dim, 0.0));
  if (n == 1) return pts;
  if (basis_rows.rows < n - 1) throw std::invalid_argument("simplex_points: basis too small");
  // vertices e_i - centroid in R^n, expressed in an orthonormal basis of the
  // centered hyperplane via Gram-Schmidt, then scaled to unit circumradius
  std::vector<Vec> r(n, Vec(n, -1.0 / n));
  for (int i = 0; i < n; ++i) r[i][i] += 1.0;
  std::vector<Vec> basis;  // (n-1) orthonormal vectors in R^n
  for (int i = 0; i < n - 1; ++i) {
    Vec b = r[i];
    for (const auto& u : basis) axpy(-dot(b, u), u, b);
    const double nb = norm(b);
    basis.push_back(scaled(b, 1.0 / nb));
  }
  const double circumradius = std::sqrt(1.0 - 1.0 / n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n - 1; ++k) {
      const double coord = dot(r[i], basis[k]) / circumradius;
      for (int d = 0; d < dim; ++d) pts[i][d] += coord * basis_rows.at(k, d);
    }
  }
  return pts;
}

// The full frozen world for one experiment: codec, feature map, and concept
// tasks. Component means are placed inside span(codec) so concept geometry
// survives encoding. When dimensions allow, concept centers sit on a
// seeded randomly-rotated regular simplex and the two-component axes on a
// second simplex in the orthogonal complement, making the suite congruent
// under any task permutation (task order carries no geometric advantage).
// Otherwise placement falls back to rejection sampling. Either way every
// cross-task component distance must clear 4x the largest component stddev.
struct TaskSuite {
  TaskSuiteParams params;
  FrozenCodec codec;
  FeatureEmbedder embedder;
  std::vector<ConceptTask> tasks;

  static TaskSuite build(const TaskSuiteParams& p) {
    if (p.n_tasks < 1) throw std::invalid_argument("TaskSuite: n_tasks must be >= 1");
    if (p.components_per_task < 1)
      throw std::invalid_argument("TaskSuite: components_per_task must be >= 1");
    if (p.latent_dim > p.data_dim)
      throw std::invalid_argument("TaskSuite: latent_dim must be <= data_dim");
    Rng codec_rng(derive_seed(p.seed, 0xC0DEC));
    Rng embed_rng(derive_seed(p.seed, 0xFEA7));
    Rng task_rng(derive_seed(p.seed, 0x7A5C));

    TaskSuite suite{p, FrozenCodec::seeded(p.data_dim, p.latent_dim, codec_rng),
                    FeatureEmbedder::seeded(p.data_dim, p.cond_dim, p.feature_dim, embed_rng),
                    {}};

    const int n = p.n_tasks;
    const bool symmetric = p.components_per_task == 2 && p.latent_dim >= 2 * (n - 1) &&
                           p.cond_dim >= n - 1 && n >= 2;
    std::vector<std::vector<Vec>> latent_means(n);
    std::vector<Vec> embeddings(n);

    if (symmetric) {
      const Matrix dirs = orthonormal_rows(2 * (n - 1), p.latent_dim, task_rng);
      Matrix center_basis(n - 1, p.latent_dim), axis_basis(n - 1, p.latent_dim);
      for (int k = 0; k < n - 1; ++k)
        for (int d = 0; d < p.latent_dim; ++d) {
          center_basis.at(k, d) = dirs.at(k, d);
          axis_basis.at(k, d) = dirs.at(n - 1 + k, d);
        }
      const auto centers = simplex_points(n, center_basis);
      const auto axes = simplex_points(n, axis_basis);
      for (int i = 0; i < n; ++i) {
        for (int sign : {+1, -1}) {
          Vec m = scaled(centers[i], p.concept_radius);
          axpy(sign * p.component_spread, axes[i], m);
          latent_means[i].push_back(std::move(m));
        }
      }
      const Matrix cond_basis = orthonormal_rows(n - 1, p.cond_dim, task_rng);
      auto cond_points = simplex_points(n, cond_basis);
      for (int i = 0; i < n; ++i) embeddings[i] = std::move(cond_points[i]);
    } else {
      auto random_unit = [](Rng& rng, int dim) {
        Vec v = rng.normal_vec(dim);
        return scaled(v, 1.0 / norm(v));
      };
      const double min_sep = 4.0 * p.noise_std;
      std::vector<Vec> placed;
      int done = 0;
      for (int attempt = 0; attempt < 1000 && done < n; ++attempt) {
        const Vec center = scaled(random_unit(task_rng, p.latent_dim), p.concept_radius);
        std::vector<Vec> means;
        for (int c = 0; c < p.components_per_task; ++c) {
          Vec m = center;
          axpy(p.component_spread, random_unit(task_rng, p.latent_dim), m);
          means.push_back(std::move(m));
        }
        bool ok = true;
        for (const auto& m : means)
          for (const auto& other : placed) {
            Vec d = m;
            axpy(-1.0, other, d);
            if (norm(d) < min_sep) ok = false;
          }
        if (!ok) continue;
        latent_means[done] = means;
        embeddings[done] = random_unit(task_rng, p.cond_dim);
        placed.insert(placed.end(), means.begin(), means.end());
        ++done;
      }
      if (done < n)
        throw std::runtime_error("TaskSuite: could not place separated concepts; "
                                 "reduce noise_std or n_tasks");
    }

    for (int i = 0; i < n; ++i) {
      ConceptTask task;
      task.id = i;
      for (const auto& m : latent_means[i]) {
        MixtureComponent comp;
        comp.mean = suite.codec.decode(m);
        comp.stddev = Vec(p.data_dim, p.noise_std);
        comp.weight = 1.0 / p.components_per_task;
        task.components.push_back(std::move(comp));
      }
      task.concept_embedding = embeddings[i];
      const double off_scale = p.prompt_offset_scale * norm(task.concept_embedding);
      for (int v = 0; v < p.prompt_variants; ++v)
        task.prompt_offsets.push_back(scaled(task_rng.normal_vec(p.cond_dim), off_scale));
      task.validate();
      suite.tasks.push_back(std::move(task));
    }

    // Separation margin holds for both placement paths.
    const double min_sep = 4.0 * p.noise_std;
    for (int a = 0; a < n; ++a)
      for (int b = a + 1; b < n; ++b)
        for (const auto& ma : latent_means[a])
          for (const auto& mb : latent_means[b]) {
            Vec d = ma;
            axpy(-1.0, mb, d);
            if (norm(d) < min_sep)
              throw std::runtime_error("TaskSuite: concept separation below margin; "
                                       "adjust radius/spread/noise_std");
          }

    // Align the frozen condition map with mean concept features.
    std::vector<Vec> cond_embeddings;
    std::vector<Vec> targets;
    for (const auto& t : suite.tasks) {
      cond_embeddings.push_back(t.concept_embedding);
      Vec f(p.feature_dim, 0.0);
      for (const auto& c : t.components) axpy(c.weight, suite.embedder.embed(c.mean), f);
      targets.push_back(std::move(f));
    }
    suite.embedder.calibrate_condition_map(cond_embeddings, targets);
    return suite;
  }
};

}  // namespace replab

#endif  // REPLAB_LATENTSPACE_HPP
