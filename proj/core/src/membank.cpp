#include "camctx/membank.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "camctx/error.hpp"

namespace camctx {

namespace {

std::uint32_t parse_u32(std::string_view s, std::string_view what) {
  std::uint32_t v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size())
    throw ConfigError("strategy: bad " + std::string(what) + " '" + std::string(s) + "'");
  return v;
}

double parse_real(std::string_view s, std::string_view what) {
  try {
    std::size_t used = 0;
    const std::string str(s);
    const double v = std::stod(str, &used);
    if (used != str.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("strategy: bad " + std::string(what) + " '" + std::string(s) + "'");
  }
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

CurationStrategy CurationStrategy::top(std::uint32_t k) {
  CurationStrategy s;
  s.kind = Kind::top_k;
  s.k = k;
  s.validate();
  return s;
}

CurationStrategy CurationStrategy::positive(double threshold) {
  CurationStrategy s;
  s.kind = Kind::positive_only;
  s.score_threshold = threshold;
  s.validate();
  return s;
}

CurationStrategy CurationStrategy::strided(std::uint32_t stride, std::uint32_t base) {
  CurationStrategy s;
  s.kind = Kind::stride_subsample;
  s.stride = stride;
  s.base = base;
  s.validate();
  return s;
}

CurationStrategy CurationStrategy::keep_all() {
  CurationStrategy s;
  s.kind = Kind::all;
  return s;
}

CurationStrategy CurationStrategy::oracle_positive() {
  CurationStrategy s;
  s.kind = Kind::positive_oracle;
  return s;
}

void CurationStrategy::validate() const {
  switch (kind) {
    case Kind::top_k:
      if (k < 1) throw ConfigError("strategy: top_k needs k >= 1");
      break;
    case Kind::positive_only:
      if (!(score_threshold >= 0.0 && score_threshold <= 1.0))
        throw ConfigError("strategy: positive_only threshold must lie in [0, 1]");
      break;
    case Kind::stride_subsample:
      if (stride < 1) throw ConfigError("strategy: stride must be >= 1");
      if (base >= stride) throw ConfigError("strategy: stride base must be below the stride");
      break;
    case Kind::all:
    case Kind::positive_oracle:
      break;
    default:
      throw ConfigError("strategy: unknown kind");
  }
}

CurationStrategy CurationStrategy::parse(std::string_view text) {
  const auto parts = split(text, ':');
  const auto name = parts.front();
  const auto nargs = parts.size() - 1;
  auto arity = [&](std::size_t lo, std::size_t hi) {
    if (nargs < lo || nargs > hi)
      throw ConfigError("strategy: wrong number of arguments in '" + std::string(text) + "'");
  };
  if (name == "top_k") {
    arity(1, 1);
    return top(parse_u32(parts[1], "k"));
  }
  if (name == "stride") {
    arity(1, 2);
    return strided(parse_u32(parts[1], "stride"), nargs == 2 ? parse_u32(parts[2], "base") : 0);
  }
  if (name == "positive_only") {
    arity(0, 1);
    return positive(nargs == 1 ? parse_real(parts[1], "threshold") : 0.5);
  }
  if (name == "positive_oracle") {
    arity(0, 0);
    return oracle_positive();
  }
  if (name == "all") {
    arity(0, 0);
    return keep_all();
  }
  throw ConfigError("strategy: unknown strategy '" + std::string(text) + "'");
}

std::string CurationStrategy::to_string() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::top_k: os << "top_k:" << k; break;
    case Kind::positive_only: os << "positive_only:" << score_threshold; break;
    case Kind::stride_subsample:
      os << "stride:" << stride;
      if (base != 0) os << ':' << base;
      break;
    case Kind::all: os << "all"; break;
    case Kind::positive_oracle: os << "positive_oracle"; break;
  }
  return os.str();
}

std::vector<ContextEntry> curate_frame(std::span<const ScoredDetection> detections,
                                       const CurationStrategy& strategy,
                                       std::uint64_t frame_index, std::uint64_t frame_id,
                                       const Timestamp& timestamp,
                                       std::optional<bool> has_object) {
  std::vector<std::size_t> order(detections.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return detections[a].score > detections[b].score;
  });

  std::size_t keep = 0;
  switch (strategy.kind) {
    case CurationStrategy::Kind::top_k:
      keep = std::min<std::size_t>(strategy.k, order.size());
      break;
    case CurationStrategy::Kind::positive_only:
      while (keep < order.size() && detections[order[keep]].score >= strategy.score_threshold) ++keep;
      break;
    case CurationStrategy::Kind::stride_subsample: {
      const auto offset = static_cast<std::int64_t>(frame_index) - strategy.base;
      const auto stride = static_cast<std::int64_t>(strategy.stride);
      keep = ((offset % stride) + stride) % stride == 0 ? std::min<std::size_t>(1, order.size()) : 0;
      break;
    }
    case CurationStrategy::Kind::all:
      keep = order.size();
      break;
    case CurationStrategy::Kind::positive_oracle:
      if (!has_object) throw ConfigError("positive_oracle curation needs ground-truth frame flags");
      keep = *has_object ? std::min<std::size_t>(1, order.size()) : 0;
      break;
  }

  std::vector<ContextEntry> out;
  out.reserve(keep);
  for (std::size_t r = 0; r < keep; ++r) {
    const auto& d = detections[order[r]];
    ContextEntry e;
    e.embedding.assign(d.embedding.begin(), d.embedding.end());
    e.code = encode(timestamp, d.box);
    e.timestamp = timestamp;
    e.frame_index = frame_index;
    e.box_rank = static_cast<std::uint32_t>(r);
    e.box = d.box;
    e.score = d.score;
    e.source_frame_id = frame_id;
    e.predicted_class = d.predicted_class;
    out.push_back(std::move(e));
  }
  return out;
}

LongTermBank::LongTermBank(std::uint32_t camera_id, std::size_t d_feat, CurationStrategy strategy,
                           std::size_t capacity)
    : camera_id_(camera_id), d_feat_(d_feat), strategy_(strategy), capacity_(capacity) {
  if (d_feat_ == 0) throw ShapeError("LongTermBank: d_feat must be positive");
  if (capacity_ == 0) throw ConfigError("LongTermBank: capacity must be positive");
  strategy_.validate();
}

namespace {
bool entry_before(const ContextEntry& a, const ContextEntry& b) {
  return a.frame_index != b.frame_index ? a.frame_index < b.frame_index : a.box_rank < b.box_rank;
}
}  // namespace

void LongTermBank::append(ContextEntry e) {
  if (e.embedding.size() != d_feat_) throw InputError("LongTermBank: embedding length != d_feat");
  if (!(e.score >= 0.0 && e.score <= 1.0)) throw InputError("LongTermBank: score outside [0, 1]");
  if (!entries_.empty() && !entry_before(entries_.back(), e))
    throw InputError("LongTermBank: entries must be appended in (frame, rank) order");
  entries_.push_back(std::move(e));
  evict();
}

void LongTermBank::assign(std::vector<ContextEntry> entries) {
  for (const auto& e : entries)
    if (e.embedding.size() != d_feat_) throw InputError("LongTermBank: embedding length != d_feat");
  std::stable_sort(entries.begin(), entries.end(), entry_before);
  entries_ = std::move(entries);
  evict();
}

void LongTermBank::evict() {
  if (entries_.size() > capacity_)
    entries_.erase(entries_.begin(),
                   entries_.begin() + static_cast<std::ptrdiff_t>(entries_.size() - capacity_));
}

LongTermBank build_long_term(std::span<const FrameDetections> frames,
                             const CurationStrategy& strategy, std::size_t d_feat,
                             std::size_t capacity) {
  const std::uint32_t camera = frames.empty() ? 0 : frames.front().camera_id;
  LongTermBank bank(camera, d_feat, strategy, capacity);
  std::vector<ContextEntry> kept;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& f = frames[i];
    if (f.camera_id != camera) throw InputError("build_long_term: frames from more than one camera");
    if (i > 0 && f.frame_index <= frames[i - 1].frame_index)
      throw InputError("build_long_term: frames not in time order");
    for (auto& e : curate_frame(f.detections, strategy, f.frame_index, f.frame_id, f.timestamp,
                                f.has_object)) {
      if (e.embedding.size() != d_feat) throw InputError("build_long_term: embedding length != d_feat");
      kept.push_back(std::move(e));
    }
  }
  if (kept.size() > capacity)
    kept.erase(kept.begin(), kept.begin() + static_cast<std::ptrdiff_t>(kept.size() - capacity));
  bank.assign(std::move(kept));
  return bank;
}

BankRows query_bank(const LongTermBank& bank, const BankQuery& q) {
  if (q.horizon < 0) throw ParameterError("query_bank: negative horizon");
  BankRows out;
  const std::size_t width = bank.context_width();
  std::vector<double> data;
  const auto entries = bank.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const auto t = e.time();
    const auto dt = t - q.time;
    if (dt < -q.horizon || dt > (q.causal ? 0 : q.horizon)) continue;
    data.insert(data.end(), e.embedding.begin(), e.embedding.end());
    data.insert(data.end(), e.code.values.begin(), e.code.values.end());
    out.times.push_back(t);
    out.entry_indices.push_back(i);
  }
  out.features = Matrix(out.times.size(), width, std::move(data));
  return out;
}

BankContext::BankContext(const LongTermBank& bank) {
  const std::size_t width = bank.context_width();
  features_ = Matrix(bank.size(), width);
  times_.reserve(bank.size());
  const auto entries = bank.entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto row = features_.row(i);
    std::copy(entries[i].embedding.begin(), entries[i].embedding.end(), row.begin());
    std::copy(entries[i].code.values.begin(), entries[i].code.values.end(),
              row.begin() + static_cast<std::ptrdiff_t>(bank.d_feat()));
    times_.push_back(entries[i].time());
  }
  if (!std::is_sorted(times_.begin(), times_.end()))
    throw InputError("BankContext: bank times are not sorted");
}

std::pair<std::size_t, std::size_t> BankContext::window(const BankQuery& q) const {
  if (q.horizon < 0) throw ParameterError("BankContext: negative horizon");
  const auto lo = std::lower_bound(times_.begin(), times_.end(), q.time - q.horizon);
  const auto hi = std::upper_bound(times_.begin(), times_.end(), q.causal ? q.time : q.time + q.horizon);
  const auto first = static_cast<std::size_t>(lo - times_.begin());
  const auto last = static_cast<std::size_t>(hi - times_.begin());
  return {first, std::max(first, last)};
}

MatrixView BankContext::rows_for(const BankQuery& q) const {
  const auto [first, last] = window(q);
  return features_.view().row_range(first, last);
}

LongTermBank flip_bank(const LongTermBank& bank) {
  LongTermBank out = bank;
  std::vector<ContextEntry> entries(bank.entries().begin(), bank.entries().end());
  for (auto& e : entries) {
    e.code = flip_code(e.code);
    e.box = e.box.flipped();
  }
  out.assign(std::move(entries));
  return out;
}

MatrixView ShortTermMemory::frame_block(std::size_t k) const {
  if (k >= frames()) throw ShapeError("ShortTermMemory: frame index out of range");
  return features.view().row_range(k * per_frame, (k + 1) * per_frame);
}

ShortTermMemory build_short_term(std::span<const MatrixView> pooled_frames,
                                 std::span<const std::uint64_t> frame_ids) {
  if (pooled_frames.size() != frame_ids.size()) throw ShapeError("build_short_term: id count");
  if (pooled_frames.size() > kMaxShortTermWindow)
    throw ShapeError("build_short_term: window longer than " + std::to_string(kMaxShortTermWindow));
  ShortTermMemory mem;
  if (pooled_frames.empty()) return mem;
  const std::size_t per = pooled_frames.front().rows();
  const std::size_t depth = pooled_frames.front().cols();
  std::vector<double> data;
  data.reserve(per * depth * pooled_frames.size());
  for (const auto& f : pooled_frames) {
    if (f.rows() != per) throw ShapeError("build_short_term: proposal counts differ across frames");
    if (f.cols() != depth) throw ShapeError("build_short_term: feature depths differ across frames");
    data.insert(data.end(), f.data(), f.data() + per * depth);
  }
  mem.features = Matrix(per * pooled_frames.size(), depth, std::move(data));
  mem.frame_ids.assign(frame_ids.begin(), frame_ids.end());
  mem.per_frame = per;
  return mem;
}

}  // namespace camctx
