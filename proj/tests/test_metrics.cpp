#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "replab/matrix.hpp"
#include "replab/metrics.hpp"
#include "replab/stats.hpp"

using namespace replab;

TEST_CASE("image alignment: identical and orthogonal singletons") {
  CHECK(image_alignment({{1.0, 0.0}}, {{1.0, 0.0}}).value == Catch::Approx(1.0));
  CHECK(image_alignment({{1.0, 0.0}}, {{0.0, 1.0}}).value == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("image alignment: 2x2 sets equal the mean of all four cosines") {
  Rng rng(1);
  const std::vector<Vec> gen = {rng.normal_vec(5), rng.normal_vec(5)};
  const std::vector<Vec> ref = {rng.normal_vec(5), rng.normal_vec(5)};
  double expected = 0.0;
  for (const auto& g : gen)
    for (const auto& r : ref) expected += cosine(g, r) / 4.0;
  CHECK(image_alignment(gen, ref).value == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("image alignment: zero-norm features are excluded, all-excluded errors out") {
  const auto r = image_alignment({{0.0, 0.0}, {1.0, 0.0}}, {{1.0, 0.0}});
  CHECK(r.excluded == 1);
  CHECK(r.value == Catch::Approx(1.0));
  CHECK_THROWS_AS(image_alignment({{0.0, 0.0}}, {{1.0, 0.0}}), std::runtime_error);
}

TEST_CASE("text alignment: equal, antipodal and random sets") {
  const Vec prompt = {0.6, 0.8};
  CHECK(text_alignment({prompt}, prompt).value == Catch::Approx(1.0));
  CHECK(text_alignment({{-0.6, -0.8}}, prompt).value == Catch::Approx(-1.0));

  Rng rng(2);
  std::vector<Vec> gen;
  for (int i = 0; i < 6; ++i) gen.push_back(rng.normal_vec(2));
  double expected = 0.0;
  for (const auto& g : gen) expected += cosine(g, prompt) / 6.0;
  CHECK(text_alignment(gen, prompt).value == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("alignment metrics are invariant under a common rotation") {
  Rng rng(3);
  std::vector<Vec> gen, ref;
  for (int i = 0; i < 4; ++i) gen.push_back(rng.normal_vec(6));
  for (int i = 0; i < 3; ++i) ref.push_back(rng.normal_vec(6));
  const Vec prompt = rng.normal_vec(6);

  Rng qrng(4);
  const Matrix q = orthonormal_rows(6, 6, qrng);
  auto rotate = [&](const Vec& v) { return matvec(q, v); };
  std::vector<Vec> gen_r, ref_r;
  for (const auto& v : gen) gen_r.push_back(rotate(v));
  for (const auto& v : ref) ref_r.push_back(rotate(v));

  CHECK(image_alignment(gen_r, ref_r).value ==
        Catch::Approx(image_alignment(gen, ref).value).margin(1e-9));
  CHECK(text_alignment(gen_r, rotate(prompt)).value ==
        Catch::Approx(text_alignment(gen, prompt).value).margin(1e-9));
}

TEST_CASE("vendi: identical samples score exactly one") {
  const std::vector<Vec> feats(7, Vec{0.3, 0.4});
  const VendiScores v = vendi_score(feats);
  CHECK(v.score == Catch::Approx(1.0).margin(1e-12));
  CHECK(v.eigen_score == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("vendi: vanishing off-diagonal kernel scores n") {
  SECTION("antipodal pair through the feature path") {
    const VendiScores v = vendi_score({{1.0, 0.0}, {-1.0, 0.0}});
    CHECK(v.score == Catch::Approx(2.0).margin(1e-12));
    CHECK(v.eigen_score == Catch::Approx(2.0).margin(1e-9));
  }
  SECTION("synthetic zero kernel at larger n") {
    SimilarityKernel k;
    k.n = 5;
    k.k.assign(25, 0.0);
    for (int i = 0; i < 5; ++i) k.at(i, i) = 1.0;
    const VendiScores v = vendi_from_kernel(k);
    CHECK(v.score == Catch::Approx(5.0).margin(1e-12));
    CHECK(v.eigen_score == Catch::Approx(5.0).margin(1e-9));
  }
}

TEST_CASE("vendi: bounded by [1, n] and permutation invariant") {
  for (int trial = 0; trial < 50; ++trial) {
    Rng rng(100 + trial);
    const int n = 2 + static_cast<int>(rng.uniform_int(8));
    std::vector<Vec> feats;
    for (int i = 0; i < n; ++i) feats.push_back(rng.normal_vec(4));
    const VendiScores v = vendi_score(feats);
    CHECK(v.score >= 1.0 - 1e-12);
    CHECK(v.score <= n + 1e-12);

    std::vector<Vec> shuffled = feats;
    for (std::size_t i = shuffled.size(); i > 1; --i)
      std::swap(shuffled[i - 1], shuffled[rng.uniform_int(i)]);
    CHECK(vendi_score(shuffled).score == Catch::Approx(v.score).margin(1e-12));
  }
}

TEST_CASE("vendi: duplicating a sample never increases the score") {
  for (int trial = 0; trial < 200; ++trial) {
    Rng rng(900 + trial);
    const int n = 2 + static_cast<int>(rng.uniform_int(6));
    std::vector<Vec> feats;
    for (int i = 0; i < n; ++i) feats.push_back(rng.normal_vec(3));
    const double before = vendi_score(feats).score;
    feats.push_back(feats[rng.uniform_int(n)]);
    CHECK(vendi_score(feats).score <= before + 1e-12);
  }
}

TEST_CASE("vendi: density and eigenvalue forms rank-correlate strongly") {
  std::vector<double> density, eigen;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng(5000 + trial);
    const int n = 3 + static_cast<int>(rng.uniform_int(8));
    std::vector<Vec> feats;
    // vary the cluster tightness so scores spread over the [1, n] range
    const double spread = 0.05 + 3.0 * rng.uniform01();
    const Vec center = rng.normal_vec(4);
    for (int i = 0; i < n; ++i) {
      Vec f = center;
      for (auto& x : f) x += spread * rng.normal();
      feats.push_back(f);
    }
    const VendiScores v = vendi_score(feats);
    density.push_back(v.score);
    eigen.push_back(v.eigen_score);
  }
  CHECK(spearman_rho(density, eigen) > 0.9);
}

TEST_CASE("vendi: zero-norm samples are dropped; nothing usable is an error") {
  int excluded = 0;
  const SimilarityKernel k = SimilarityKernel::from_features({{0.0, 0.0}, {1.0, 0.0}}, &excluded);
  CHECK(excluded == 1);
  CHECK(k.n == 1);
  CHECK_THROWS_AS(vendi_score({{0.0, 0.0}}), std::runtime_error);
}

TEST_CASE("similarity kernel: symmetric, unit diagonal, PSD") {
  Rng rng(6);
  std::vector<Vec> feats;
  for (int i = 0; i < 8; ++i) feats.push_back(rng.normal_vec(5));
  const SimilarityKernel k = SimilarityKernel::from_features(feats);
  Matrix m(k.n, k.n);
  for (int i = 0; i < k.n; ++i) {
    CHECK(k.at(i, i) == 1.0);
    for (int j = 0; j < k.n; ++j) {
      CHECK(k.at(i, j) == Catch::Approx(k.at(j, i)).margin(1e-9));
      CHECK(k.at(i, j) >= 0.0);
      CHECK(k.at(i, j) <= 1.0);
      m.at(i, j) = k.at(i, j);
    }
  }
  for (double ev : symmetric_eigenvalues(std::move(m))) CHECK(ev >= -1e-8);
}

TEST_CASE("tfr: no change gives zero, hand-built matrix matches arithmetic") {
  SECTION("flat matrix") {
    MetricMatrix m(3);
    m.set(1, 1, 0.8);
    m.set(2, 1, 0.8);
    m.set(2, 2, 0.7);
    m.set(3, 1, 0.8);
    m.set(3, 2, 0.7);
    m.set(3, 3, 0.9);
    CHECK(tfr(m, 3).value() == Catch::Approx(0.0).margin(1e-15));
  }
  SECTION("hand case: diag (0.8, 0.7), final row (0.6, 0.6)") {
    MetricMatrix m(3);
    m.set(1, 1, 0.8);
    m.set(2, 2, 0.7);
    m.set(2, 1, 0.7);
    m.set(3, 1, 0.6);
    m.set(3, 2, 0.6);
    m.set(3, 3, 0.75);
    CHECK(tfr(m, 3).value() == Catch::Approx(((0.8 - 0.6) + (0.7 - 0.6)) / 2.0).epsilon(1e-12));
  }
  SECTION("k < 2 is reported absent") {
    MetricMatrix m(1);
    m.set(1, 1, 0.5);
    CHECK_FALSE(tfr(m, 1).has_value());
  }
}

TEST_CASE("tfr: scaling the matrix scales the value linearly") {
  Rng rng(7);
  MetricMatrix m(4), m2(4);
  const double c = 2.75;
  for (int k = 1; k <= 4; ++k)
    for (int l = 1; l <= k; ++l) {
      const double v = rng.normal();
      m.set(k, l, v);
      m2.set(k, l, c * v);
    }
  CHECK(tfr(m2, 4).value() == Catch::Approx(c * tfr(m, 4).value()).epsilon(1e-12));
}

TEST_CASE("tfr: direction agrees with published per-task means") {
  // final-row means for the weakest and strongest sequential methods, under a
  // shared just-after-learning diagonal; the forgetting gap must keep its sign
  const Vec naive_final = {63.56, 65.25, 61.77, 61.23};
  const Vec lr_final = {77.59, 70.43, 76.94, 79.96};
  const double diag = 85.0;
  auto build = [&](const Vec& final_row) {
    MetricMatrix m(5);
    for (int k = 1; k <= 5; ++k)
      for (int l = 1; l <= k; ++l) m.set(k, l, diag);
    for (int l = 1; l <= 4; ++l) m.set(5, l, final_row[l - 1]);
    return m;
  };
  const double tfr_naive = tfr(build(naive_final), 5).value();
  const double tfr_lr = tfr(build(lr_final), 5).value();
  CHECK(tfr_naive > tfr_lr);  // 16.16 vs 4.84 reported at full scale
}
