#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "camctx/encoding.hpp"
#include "camctx/matrix.hpp"
#include "camctx/membank.hpp"
#include "camctx/numkit.hpp"

namespace camctx {

inline constexpr double kDefaultTemperature = 0.01;

// Parameters of one attention stage.
//   key:   d_feat -> d_attn, applied to pooled keyframe proposals
//   query: d_ctx  -> d_attn, applied to memory rows
//   value: d_ctx  -> d_attn, applied to memory rows
//   out:   d_attn -> d_feat, projects the aggregate back to feature depth
struct AttentionParams {
  LinearMap key;
  LinearMap query;
  LinearMap value;
  LinearMap out;
  double temperature = kDefaultTemperature;

  static AttentionParams init(std::size_t d_feat, std::size_t d_ctx, std::size_t d_attn, Rng& rng,
                              double temperature = kDefaultTemperature);
  static AttentionParams zeros(std::size_t d_feat, std::size_t d_ctx, std::size_t d_attn,
                               double temperature = kDefaultTemperature);

  std::size_t d_feat() const noexcept { return key.d_in(); }
  std::size_t d_ctx() const noexcept { return query.d_in(); }
  std::size_t d_attn() const noexcept { return key.d_out(); }

  // Throws ShapeError / ParameterError when the four maps disagree or T <= 0.
  void validate() const;

  std::vector<std::span<double>> parameters();
  std::vector<std::span<const double>> parameters() const;

  friend bool operator==(const AttentionParams&, const AttentionParams&) = default;
};

// Keyframe proposals: cropped features A [n x h x w x d], their pooled form,
// boxes and detector scores.
struct ProposalBatch {
  Tensor4 features;
  Matrix pooled;
  std::vector<BoxPx> boxes;
  std::vector<double> scores;
  Timestamp time;

  static ProposalBatch from_features(Tensor4 features, std::vector<BoxPx> boxes,
                                     std::vector<double> scores, Timestamp time);
  std::size_t size() const noexcept { return features.n(); }
};

// Row-stochastic n x m attention, plus the time of each memory row when known.
struct AttentionWeights {
  Matrix w;
  std::vector<std::int64_t> row_times;

  bool empty() const noexcept { return w.cols() == 0; }
};

struct ContextBias {
  Matrix values;  // n x d_feat
};

// Softmax(k(a_pool) q(b)^T / (T sqrt(d_attn))). With m = 0 returns an n x 0
// matrix, the empty-memory signal.
AttentionWeights attention_weights(MatrixView a_pool, MatrixView b, const AttentionParams& p);

// f(w v(b)).
ContextBias context_feature(const AttentionWeights& w, MatrixView b, const AttentionParams& p);

// Adds the context bias to every spatial cell of A and recomputes the pooled
// view. With m = 0 the batch is returned unchanged.
ProposalBatch attention_block(const ProposalBatch& a, MatrixView b, const AttentionParams& p,
                              AttentionWeights* weights_out = nullptr);

// Intermediate values of one stage, retained for the backward pass.
struct AttentionCache {
  Matrix input;             // pooled features entering the stage, n x d_feat
  MatrixView memory;        // m x d_ctx, not owned
  Matrix keys;              // n x d_attn
  Matrix projected_keys;    // keys * W_q, n x d_ctx
  Matrix weights;           // n x m
  Matrix weighted_memory;   // weights * memory, n x d_ctx
  Matrix aggregate;         // value map of weighted_memory, n x d_attn
  bool skipped = true;      // m == 0
};

// Returns the context bias F (n x d_feat), zero when m = 0. The query bias
// shifts every logit of a row equally and is dropped before the softmax.
Matrix attention_forward(MatrixView pooled, MatrixView memory, const AttentionParams& p,
                         AttentionCache* cache = nullptr);

// Accumulates parameter gradients into `grad` for upstream dL/dF and returns
// dL/d(pooled) through the key path. Memory rows are constants.
Matrix attention_backward(const AttentionCache& cache, MatrixView d_bias, const AttentionParams& p,
                          AttentionParams& grad);

enum class HeadMode : std::uint8_t { sf = 1, st = 2, lt = 3, st_lt = 4 };

std::string_view to_string(HeadMode mode) noexcept;
std::optional<HeadMode> parse_head_mode(std::string_view text) noexcept;
bool uses_short_term(HeadMode mode) noexcept;
bool uses_long_term(HeadMode mode) noexcept;

// Memory handed to the head. `long_term` rows are (embedding, code); an empty
// view is a valid bank with no rows, std::nullopt means "not supplied".
struct HeadMemory {
  const ShortTermMemory* short_term = nullptr;
  std::optional<MatrixView> long_term;
  std::span<const std::int64_t> long_times;
};

struct HeadCache {
  AttentionCache short_stage;
  AttentionCache long_stage;
  bool short_used = false;
  bool long_used = false;
};

// Pooled-feature path of the head: short stage, re-pool, long stage.
// Throws ConfigError when an enabled stage has no memory, or SF is given a
// short-term window of more than one frame.
Matrix head_forward(MatrixView pooled, const HeadMemory& memory, const AttentionParams& short_params,
                    const AttentionParams& long_params, HeadMode mode, HeadCache* cache = nullptr);

// Backward of head_forward; returns dL/d(pooled input).
Matrix head_backward(const HeadCache& cache, MatrixView d_out, const AttentionParams& short_params,
                     const AttentionParams& long_params, AttentionParams& short_grad,
                     AttentionParams& long_grad);

// Full-tensor head: biases A with both stages' context and returns the batch
// the classifier consumes. Long-stage weights are written to `long_weights`.
ProposalBatch context_head(const ProposalBatch& a, const HeadMemory& memory,
                           const AttentionParams& short_params, const AttentionParams& long_params,
                           HeadMode mode, AttentionWeights* long_weights = nullptr);

// Time offsets (entry time - keyframe time) of memory rows whose weight in
// `row` is at least `threshold`.
std::vector<std::int64_t> attention_timeline(const AttentionWeights& w, std::size_t row,
                                             std::int64_t keyframe_time, double threshold = 0.01);

}  // namespace camctx
