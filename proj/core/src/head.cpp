#include "camctx/attention.hpp"

#include "camctx/error.hpp"

namespace camctx {

std::string_view to_string(HeadMode mode) noexcept {
  switch (mode) {
    case HeadMode::sf: return "sf";
    case HeadMode::st: return "st";
    case HeadMode::lt: return "lt";
    case HeadMode::st_lt: return "st+lt";
  }
  return "?";
}

std::optional<HeadMode> parse_head_mode(std::string_view text) noexcept {
  if (text == "sf") return HeadMode::sf;
  if (text == "st") return HeadMode::st;
  if (text == "lt") return HeadMode::lt;
  if (text == "st+lt") return HeadMode::st_lt;
  return std::nullopt;
}

bool uses_short_term(HeadMode mode) noexcept { return mode != HeadMode::lt; }
bool uses_long_term(HeadMode mode) noexcept { return mode == HeadMode::lt || mode == HeadMode::st_lt; }

namespace {

MatrixView short_memory_for(const HeadMemory& memory, HeadMode mode) {
  if (!memory.short_term)
    throw ConfigError("context head: mode " + std::string(to_string(mode)) + " needs short-term memory");
  if (mode == HeadMode::sf && memory.short_term->frames() > 1)
    throw ConfigError("context head: SF mode takes a single-frame short-term window");
  return memory.short_term->features;
}

MatrixView long_memory_for(const HeadMemory& memory, HeadMode mode) {
  if (!memory.long_term)
    throw ConfigError("context head: mode " + std::string(to_string(mode)) + " needs a long-term bank");
  return *memory.long_term;
}

void add_into(Matrix& dst, const Matrix& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst.values()[i] += src.values()[i];
}

}  // namespace

Matrix head_forward(MatrixView pooled, const HeadMemory& memory, const AttentionParams& short_params,
                    const AttentionParams& long_params, HeadMode mode, HeadCache* cache) {
  Matrix current(pooled);
  if (cache) *cache = HeadCache{};
  if (uses_short_term(mode)) {
    const MatrixView mem = short_memory_for(memory, mode);
    add_into(current, attention_forward(current, mem, short_params,
                                        cache ? &cache->short_stage : nullptr));
    if (cache) cache->short_used = true;
  }
  if (uses_long_term(mode)) {
    const MatrixView mem = long_memory_for(memory, mode);
    add_into(current, attention_forward(current, mem, long_params,
                                        cache ? &cache->long_stage : nullptr));
    if (cache) cache->long_used = true;
  }
  return current;
}

Matrix head_backward(const HeadCache& cache, MatrixView d_out, const AttentionParams& short_params,
                     const AttentionParams& long_params, AttentionParams& short_grad,
                     AttentionParams& long_grad) {
  // Each stage is x -> x + F(x), so dx = dy + dF/dx^T dy.
  Matrix d(d_out);
  if (cache.long_used) add_into(d, attention_backward(cache.long_stage, d, long_params, long_grad));
  if (cache.short_used)
    add_into(d, attention_backward(cache.short_stage, d, short_params, short_grad));
  return d;
}

ProposalBatch context_head(const ProposalBatch& a, const HeadMemory& memory,
                           const AttentionParams& short_params, const AttentionParams& long_params,
                           HeadMode mode, AttentionWeights* long_weights) {
  ProposalBatch current = a;
  if (uses_short_term(mode)) current = attention_block(current, short_memory_for(memory, mode), short_params);
  if (uses_long_term(mode)) {
    AttentionWeights w;
    current = attention_block(current, long_memory_for(memory, mode), long_params, &w);
    if (long_weights) {
      if (!w.empty()) w.row_times.assign(memory.long_times.begin(), memory.long_times.end());
      *long_weights = std::move(w);
    }
  }
  return current;
}

}  // namespace camctx
