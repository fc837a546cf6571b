#include "camctx/attention.hpp"

#include <cmath>

#include "camctx/error.hpp"

namespace camctx {

AttentionParams AttentionParams::init(std::size_t d_feat, std::size_t d_ctx, std::size_t d_attn,
                                      Rng& rng, double temperature) {
  AttentionParams p;
  p.key = LinearMap::glorot(d_feat, d_attn, rng);
  p.query = LinearMap::glorot(d_ctx, d_attn, rng);
  p.value = LinearMap::glorot(d_ctx, d_attn, rng);
  p.out = LinearMap::glorot(d_attn, d_feat, rng);
  p.temperature = temperature;
  p.validate();
  return p;
}

AttentionParams AttentionParams::zeros(std::size_t d_feat, std::size_t d_ctx, std::size_t d_attn,
                                       double temperature) {
  AttentionParams p;
  p.key = LinearMap::zeros(d_feat, d_attn);
  p.query = LinearMap::zeros(d_ctx, d_attn);
  p.value = LinearMap::zeros(d_ctx, d_attn);
  p.out = LinearMap::zeros(d_attn, d_feat);
  p.temperature = temperature;
  return p;
}

void AttentionParams::validate() const {
  if (!(temperature > 0.0)) throw ParameterError("AttentionParams: temperature must be positive");
  const auto da = key.d_out();
  if (query.d_out() != da || value.d_out() != da || out.d_in() != da)
    throw ShapeError("AttentionParams: attention depths disagree");
  if (value.d_in() != query.d_in()) throw ShapeError("AttentionParams: query/value input widths differ");
  if (out.d_out() != key.d_in()) throw ShapeError("AttentionParams: output map must return to d_feat");
}

std::vector<std::span<double>> AttentionParams::parameters() {
  std::vector<std::span<double>> out_params;
  for (auto* m : {&key, &query, &value, &out})
    for (auto s : m->parameters()) out_params.push_back(s);
  return out_params;
}

std::vector<std::span<const double>> AttentionParams::parameters() const {
  std::vector<std::span<const double>> out_params;
  for (const auto* m : {&key, &query, &value, &out})
    for (auto s : m->parameters()) out_params.push_back(s);
  return out_params;
}

ProposalBatch ProposalBatch::from_features(Tensor4 features, std::vector<BoxPx> boxes,
                                           std::vector<double> scores, Timestamp time) {
  if (boxes.size() != features.n() || scores.size() != features.n())
    throw ShapeError("ProposalBatch: box/score count differs from proposal count");
  ProposalBatch b;
  b.pooled = mean_pool_spatial(features);
  b.features = std::move(features);
  b.boxes = std::move(boxes);
  b.scores = std::move(scores);
  b.time = time;
  return b;
}

namespace {

void check_stage_inputs(MatrixView pooled, MatrixView memory, const AttentionParams& p) {
  p.validate();
  if (pooled.cols() != p.d_feat()) throw ShapeError("attention: pooled width != d_feat");
  if (memory.rows() > 0 && memory.cols() != p.d_ctx())
    throw ShapeError("attention: memory width " + std::to_string(memory.cols()) + " != d_ctx " +
                     std::to_string(p.d_ctx()));
}

double logit_scale(const AttentionParams& p) {
  return p.temperature * std::sqrt(static_cast<double>(p.d_attn()));
}

void add_into(Matrix& dst, const Matrix& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst.values()[i] += src.values()[i];
}

}  // namespace

Matrix attention_forward(MatrixView pooled, MatrixView memory, const AttentionParams& p,
                         AttentionCache* cache) {
  check_stage_inputs(pooled, memory, p);
  const std::size_t n = pooled.rows();
  if (memory.rows() == 0) {
    if (cache) {
      *cache = AttentionCache{};
      cache->input = Matrix(pooled);
      cache->skipped = true;
    }
    return Matrix(n, p.d_feat());
  }

  // logits = k(a) W_q b^T; the k(a).b_q term is constant along each row.
  Matrix keys = linear_apply(pooled, p.key);
  Matrix projected = matmul(keys, p.query.weight);
  Matrix weights = softmax_rows(matmul_nt(projected, memory), logit_scale(p));
  // w v(b) = (w b) W_v^T + b_v because each row of w sums to one.
  Matrix weighted = matmul(weights, memory);
  Matrix aggregate = linear_apply(weighted, p.value);
  Matrix bias = linear_apply(aggregate, p.out);

  if (cache) {
    cache->input = Matrix(pooled);
    cache->memory = memory;
    cache->keys = std::move(keys);
    cache->projected_keys = std::move(projected);
    cache->weights = std::move(weights);
    cache->weighted_memory = std::move(weighted);
    cache->aggregate = std::move(aggregate);
    cache->skipped = false;
  }
  return bias;
}

Matrix attention_backward(const AttentionCache& cache, MatrixView d_bias, const AttentionParams& p,
                          AttentionParams& grad) {
  const std::size_t n = cache.input.rows();
  if (cache.skipped) return Matrix(n, p.d_feat());

  const Matrix d_aggregate = linear_backward(cache.aggregate, p.out, d_bias, grad.out);
  const Matrix d_weighted = linear_backward(cache.weighted_memory, p.value, d_aggregate, grad.value);
  const Matrix d_weights = matmul_nt(d_weighted, cache.memory);
  Matrix d_logits = softmax_rows_backward(cache.weights, d_weights);
  const double inv_scale = 1.0 / logit_scale(p);
  for (auto& v : d_logits.values()) v *= inv_scale;

  const Matrix d_projected = matmul(d_logits, cache.memory);
  add_into(grad.query.weight, matmul_tn(cache.keys, d_projected));
  const Matrix d_keys = matmul_nt(d_projected, p.query.weight);
  return linear_backward(cache.input, p.key, d_keys, grad.key);
}

AttentionWeights attention_weights(MatrixView a_pool, MatrixView b, const AttentionParams& p) {
  check_stage_inputs(a_pool, b, p);
  AttentionWeights out;
  if (b.rows() == 0) {
    out.w = Matrix(a_pool.rows(), 0);
    return out;
  }
  const Matrix keys = linear_apply(a_pool, p.key);
  const Matrix projected = matmul(keys, p.query.weight);
  out.w = softmax_rows(matmul_nt(projected, b), logit_scale(p));
  return out;
}

ContextBias context_feature(const AttentionWeights& w, MatrixView b, const AttentionParams& p) {
  if (w.w.cols() != b.rows()) throw ShapeError("context_feature: weight columns != memory rows");
  if (b.rows() == 0) return {Matrix(w.w.rows(), p.d_feat())};
  if (b.cols() != p.d_ctx()) throw ShapeError("context_feature: memory width != d_ctx");
  const Matrix weighted = matmul(w.w, b);
  return {linear_apply(linear_apply(weighted, p.value), p.out)};
}

namespace {

void add_channel_bias(Tensor4& a, MatrixView bias) {
  for (std::size_t i = 0; i < a.n(); ++i) {
    const auto b = bias.row(i);
    for (std::size_t y = 0; y < a.h(); ++y)
      for (std::size_t x = 0; x < a.w(); ++x) {
        auto cell = a.cell(i, y, x);
        for (std::size_t c = 0; c < a.d(); ++c) cell[c] += b[c];
      }
  }
}

}  // namespace

ProposalBatch attention_block(const ProposalBatch& a, MatrixView b, const AttentionParams& p,
                              AttentionWeights* weights_out) {
  AttentionWeights w = attention_weights(a.pooled, b, p);
  ProposalBatch out = a;
  if (!w.empty()) {
    const ContextBias bias = context_feature(w, b, p);
    add_channel_bias(out.features, bias.values);
    out.pooled = mean_pool_spatial(out.features);
  }
  if (weights_out) *weights_out = std::move(w);
  return out;
}

std::vector<std::int64_t> attention_timeline(const AttentionWeights& w, std::size_t row,
                                             std::int64_t keyframe_time, double threshold) {
  std::vector<std::int64_t> out;
  if (w.empty() || w.w.rows() == 0) return out;
  if (row >= w.w.rows()) throw ShapeError("attention_timeline: row out of range");
  if (w.row_times.size() != w.w.cols()) throw ShapeError("attention_timeline: missing row times");
  const auto r = w.w.row(row);
  for (std::size_t j = 0; j < r.size(); ++j)
    if (r[j] >= threshold) out.push_back(w.row_times[j] - keyframe_time);
  return out;
}

}  // namespace camctx
