#include <algorithm>
#include <cmath>

#include "doctest.h"
#include "oracles.hpp"

#include "camctx/attention.hpp"
#include "camctx/detector.hpp"
#include "camctx/error.hpp"
#include "camctx/gradcheck.hpp"

using namespace camctx;

namespace {

AttentionParams random_params(Rng& rng, std::size_t d, std::size_t d_ctx, std::size_t da, double t) {
  auto p = AttentionParams::init(d, d_ctx, da, rng, t);
  oracle::randomize(p, rng, 0.5);
  return p;
}

double worst_gap(MatrixView a, MatrixView b) {
  REQUIRE(a.rows() == b.rows());
  REQUIRE(a.cols() == b.cols());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) worst = std::max(worst, std::abs(a(i, j) - b(i, j)));
  return worst;
}

}  // namespace

TEST_SUITE("attention") {

TEST_CASE("weights and context feature match the loop oracle") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const std::size_t n = 1 + rng.below(8), m = 1 + rng.below(8);
    const std::size_t d = 1 + rng.below(16), d_ctx = 1 + rng.below(16), da = 1 + rng.below(16);
    const double t = rng.uniform(0.5, 2.0);
    const auto p = random_params(rng, d, d_ctx, da, t);
    const Matrix a = oracle::random_matrix(rng, n, d);
    const Matrix b = oracle::random_matrix(rng, m, d_ctx);

    const auto w = attention_weights(a, b, p);
    const Matrix w_ref = oracle::attention_weights(a, b, p);
    CHECK(worst_gap(w.w, w_ref) <= 1e-10);
    const auto f = context_feature(w, b, p);
    const Matrix f_ref = oracle::context_feature(w_ref, b, p);
    CHECK(worst_gap(f.values, f_ref) <= 1e-10);
    CHECK(worst_gap(attention_forward(a, b, p), f_ref) <= 1e-10);
  }
}

TEST_CASE("attention_block adds the bias to every cell") {
  Rng rng(42);
  const std::size_t n = 3, g = 2, d = 5, m = 4;
  const auto p = random_params(rng, d, d + 2, 3, 1.0);
  Tensor4 feats(n, g, g, d);
  for (auto& v : feats.values()) v = rng.normal();
  std::vector<BoxPx> boxes(n, BoxPx{50, 50, 10, 10, 640, 480});
  const auto batch = ProposalBatch::from_features(feats, boxes, std::vector<double>(n, 0.5), Timestamp{2012, 1, 1, 0, 0, 0});
  const Matrix b = oracle::random_matrix(rng, m, d + 2);
  AttentionWeights w;
  const auto out = attention_block(batch, b, p, &w);
  const Matrix bias = oracle::context_feature(oracle::attention_weights(batch.pooled, b, p), b, p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t y = 0; y < g; ++y)
      for (std::size_t x = 0; x < g; ++x)
        for (std::size_t c = 0; c < d; ++c)
          CHECK(std::abs(out.features.at(i, y, x, c) - feats.at(i, y, x, c) - bias(i, c)) <= 1e-12);
  CHECK(worst_gap(out.pooled, mean_pool_spatial(out.features)) <= 1e-15);
  CHECK(w.w.rows() == n);
  CHECK(w.w.cols() == m);
}

TEST_CASE("empty memory adds nothing") {
  Rng rng(1);
  const auto p = random_params(rng, 4, 6, 3, 1.0);
  const Matrix a = oracle::random_matrix(rng, 3, 4);
  const Matrix empty(0, 6);
  const auto w = attention_weights(a, empty, p);
  CHECK(w.empty());
  const Matrix f = attention_forward(a, empty, p);
  for (double v : f.values()) CHECK(v == 0.0);
  CHECK(context_feature(w, empty, p).values.rows() == 3);
}

TEST_CASE("query bias does not change the weights") {
  Rng rng(5);
  auto p = random_params(rng, 4, 5, 3, 1.0);
  const Matrix a = oracle::random_matrix(rng, 3, 4);
  const Matrix b = oracle::random_matrix(rng, 6, 5);
  const auto before = attention_weights(a, b, p);
  for (auto& v : p.query.bias) v += 10.0;
  CHECK(worst_gap(attention_weights(a, b, p).w, before.w) <= 1e-12);
}

TEST_CASE("shape and parameter validation") {
  Rng rng(2);
  auto p = random_params(rng, 4, 6, 3, 1.0);
  const Matrix a = oracle::random_matrix(rng, 2, 4);
  CHECK_THROWS_AS(attention_weights(a, Matrix(3, 5), p), ShapeError);
  CHECK_THROWS_AS(attention_weights(Matrix(2, 3), Matrix(3, 6), p), ShapeError);
  p.temperature = 0.0;
  CHECK_THROWS_AS(attention_weights(a, Matrix(3, 6), p), ParameterError);
}

TEST_CASE("softmax invariants") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(6), m = 1 + rng.below(12);
    const Matrix z = oracle::random_matrix(rng, n, m, 5.0);
    const double t = std::exp(rng.uniform(-3.0, 3.0));
    const Matrix s = softmax_rows(z, t);
    for (std::size_t i = 0; i < n; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        CHECK(s(i, j) >= 0.0);
        total += s(i, j);
      }
      CHECK(std::abs(total - 1.0) <= 1e-6);
    }
    // permuting the logits permutes the probabilities
    std::vector<std::size_t> perm(m);
    for (std::size_t j = 0; j < m; ++j) perm[j] = j;
    for (std::size_t j = m; j > 1; --j) std::swap(perm[j - 1], perm[rng.below(j)]);
    Matrix zp(n, m);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) zp(i, j) = z(i, perm[j]);
    const Matrix sp = softmax_rows(zp, t);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < m; ++j) CHECK(std::abs(sp(i, j) - s(i, perm[j])) <= 1e-12);

    const Matrix hot = softmax_rows(z, 1e6);
    for (double v : hot.values()) CHECK(std::abs(v - 1.0 / static_cast<double>(m)) <= 1e-4);
    const Matrix cold = softmax_rows(z, 1e-6);
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = z.row(i);
      const auto top = static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
      for (std::size_t j = 0; j < m; ++j) CHECK(cold(i, j) == (j == top ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("full head plus classifier passes a finite-difference check") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed + 300);
    const std::size_t d = 5, n = 3;
    auto model = DetectorModel::init(ContextMode::st_lt, 3, d, 4, seed, 0.7);
    for (auto s : model.parameters())
      for (auto& v : s) v = 0.4 * rng.normal();
    const Matrix pooled = oracle::random_matrix(rng, n, d);
    const Matrix f0 = oracle::random_matrix(rng, n, d), f1 = oracle::random_matrix(rng, n, d);
    const MatrixView frames[] = {f0.view(), f1.view()};
    const std::uint64_t ids[] = {1, 2};
    const auto st = build_short_term(frames, ids);
    const Matrix lt = oracle::random_matrix(rng, 5, d + kCodeLength);
    const std::vector<std::int64_t> times(5, 0);
    const ModelInput input{pooled, &st, lt, times};
    const std::vector<int> labels{0, 3, 2};

    auto grad = DetectorModel::zeros_like(model);
    model_loss_and_grad(model, input, labels, grad);
    const auto params = model.parameters();
    const auto analytic = std::as_const(grad).parameters();
    const auto r = finite_diff_check([&] { return model_loss(model, input, labels); }, params, analytic, 1e-4);
    INFO("seed " << seed << " worst " << r.worst_analytic << " vs " << r.worst_numeric);
    CHECK(r.max_relative_error <= 1e-4);
  }
}

TEST_CASE("modes reject missing memory") {
  Rng rng(3);
  const auto model = DetectorModel::init(ContextMode::st_lt, 2, 4, 4, 1);
  const Matrix pooled = oracle::random_matrix(rng, 2, 4);
  CHECK_THROWS_AS(model_logits(model, ModelInput{pooled, nullptr, Matrix(0, 13), {}}), ConfigError);
  const Matrix f0 = oracle::random_matrix(rng, 2, 4), f1 = oracle::random_matrix(rng, 2, 4);
  const MatrixView frames[] = {f0.view(), f1.view()};
  const std::uint64_t ids[] = {1, 2};
  const auto st = build_short_term(frames, ids);
  const Matrix pooled2 = pooled;
  HeadMemory mem;
  mem.short_term = &st;
  CHECK_THROWS_AS(head_forward(pooled2, mem, model.short_params, model.long_params, HeadMode::sf), ConfigError);
}

TEST_CASE("attention timeline keeps rows above the threshold") {
  AttentionWeights w;
  w.w = Matrix(2, 4);
  const double r0[] = {0.5, 0.005, 0.01, 0.485};
  for (std::size_t j = 0; j < 4; ++j) w.w(0, j) = r0[j];
  w.row_times = {100, 200, 300, 400};
  CHECK(attention_timeline(w, 0, 250, 0.01) == std::vector<std::int64_t>{-150, 50, 150});
  CHECK_THROWS_AS(attention_timeline(w, 2, 0, 0.01), ShapeError);
  w.row_times.pop_back();
  CHECK_THROWS_AS(attention_timeline(w, 0, 0, 0.01), ShapeError);
}

}  // TEST_SUITE
