#include "camctx/bank_io.hpp"

#include <cmath>
#include <cstring>

#include "camctx/binio.hpp"
#include "camctx/error.hpp"

namespace camctx {

std::size_t bank_record_size(std::size_t d_feat) noexcept { return 160 + 4 * d_feat; }

namespace {

std::uint64_t bank_checksum(std::span<const std::uint8_t> bytes) {
  auto h = binio::fnv1a64(bytes.subspan(0, kBankChecksumOffset));
  return binio::fnv1a64(bytes.subspan(kBankChecksumOffset + 8), h);
}

}  // namespace

std::vector<std::uint8_t> encode_bank(const LongTermBank& bank) {
  binio::Writer w;
  w.put_bytes(std::string_view(kBankMagic, sizeof(kBankMagic)));
  w.put(kBankVersion);
  w.put(bank.camera_id());
  w.put(static_cast<std::uint32_t>(bank.d_feat()));
  const auto& s = bank.strategy();
  w.put(static_cast<std::uint8_t>(s.kind));
  w.put(std::uint8_t{0});
  w.put(std::uint16_t{0});
  w.put(s.kind == CurationStrategy::Kind::stride_subsample ? s.stride : s.k);
  w.put(s.base);
  w.put(s.score_threshold);
  w.put(static_cast<std::uint64_t>(bank.capacity()));
  w.put(static_cast<std::uint64_t>(bank.size()));
  w.put(std::uint64_t{0});  // checksum, patched below
  w.put(bank.extractor_seed());

  for (const auto& e : bank.entries()) {
    w.put(e.frame_index);
    w.put(e.source_frame_id);
    w.put(static_cast<std::uint16_t>(e.timestamp.year));
    w.put(static_cast<std::uint8_t>(e.timestamp.month));
    w.put(static_cast<std::uint8_t>(e.timestamp.day));
    w.put(static_cast<std::uint8_t>(e.timestamp.hour));
    w.put(static_cast<std::uint8_t>(e.timestamp.minute));
    w.put(static_cast<std::uint8_t>(e.timestamp.second));
    w.put(std::uint8_t{0});
    w.put(e.box_rank);
    w.put(static_cast<std::int32_t>(e.predicted_class.value_or(-1)));
    w.put(e.score);
    w.put(e.box.x_center);
    w.put(e.box.y_center);
    w.put(e.box.width);
    w.put(e.box.height);
    w.put(e.box.image_width);
    w.put(e.box.image_height);
    for (double c : e.code.values) w.put(c);
    for (float v : e.embedding) w.put(v);
  }
  w.patch_u64(kBankChecksumOffset, bank_checksum(w.bytes()));
  return std::move(w.buffer());
}

LongTermBank decode_bank(std::span<const std::uint8_t> bytes) {
  binio::Reader r(bytes);
  if (bytes.size() < sizeof(kBankMagic) ||
      std::memcmp(bytes.data(), kBankMagic, sizeof(kBankMagic)) != 0)
    throw FormatError("bank: bad magic", 0);
  r.seek(sizeof(kBankMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kBankVersion)
    throw FormatError("bank: unsupported version " + std::to_string(version), 8);
  r.require(kBankHeaderSize - r.position());
  const auto camera = r.get<std::uint32_t>();
  const auto d_feat = r.get<std::uint32_t>();
  if (d_feat == 0) throw FormatError("bank: zero d_feat", 16);
  CurationStrategy s;
  const auto kind = r.get<std::uint8_t>();
  if (kind < 1 || kind > 5) throw FormatError("bank: unknown strategy kind", 20);
  s.kind = static_cast<CurationStrategy::Kind>(kind);
  r.get<std::uint8_t>();
  r.get<std::uint16_t>();
  const auto param = r.get<std::uint32_t>();
  if (s.kind == CurationStrategy::Kind::stride_subsample)
    s.stride = param;
  else
    s.k = param;
  s.base = r.get<std::uint32_t>();
  s.score_threshold = r.get<double>();
  try {
    s.validate();
  } catch (const ConfigError& e) {
    throw FormatError(std::string("bank: ") + e.what(), 24);
  }
  const auto capacity = r.get<std::uint64_t>();
  if (capacity == 0) throw FormatError("bank: zero capacity", 40);
  const auto count = r.get<std::uint64_t>();
  if (count > capacity) throw FormatError("bank: entry count exceeds capacity", 48);
  const auto stored_checksum = r.get<std::uint64_t>();
  const auto extractor_seed = r.get<std::uint64_t>();

  const std::size_t rec = bank_record_size(d_feat);
  const std::size_t expected = kBankHeaderSize + count * rec;
  if (count > (bytes.size() - kBankHeaderSize) / rec || bytes.size() < expected)
    throw FormatError("bank: truncated; " + std::to_string(count) + " records declared",
                      bytes.size());
  if (bytes.size() != expected) throw FormatError("bank: trailing bytes", expected);
  if (bank_checksum(bytes) != stored_checksum)
    throw FormatError("bank: checksum mismatch", kBankChecksumOffset);

  std::vector<ContextEntry> entries;
  entries.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    const auto at = r.position();
    ContextEntry e;
    e.frame_index = r.get<std::uint64_t>();
    e.source_frame_id = r.get<std::uint64_t>();
    e.timestamp.year = r.get<std::uint16_t>();
    e.timestamp.month = r.get<std::uint8_t>();
    e.timestamp.day = r.get<std::uint8_t>();
    e.timestamp.hour = r.get<std::uint8_t>();
    e.timestamp.minute = r.get<std::uint8_t>();
    e.timestamp.second = r.get<std::uint8_t>();
    r.get<std::uint8_t>();
    if (!e.timestamp.valid()) throw FormatError("bank: invalid timestamp", at + 16);
    e.box_rank = r.get<std::uint32_t>();
    const auto cls = r.get<std::int32_t>();
    if (cls >= 0) e.predicted_class = cls;
    e.score = r.get<double>();
    e.box.x_center = r.get<double>();
    e.box.y_center = r.get<double>();
    e.box.width = r.get<double>();
    e.box.height = r.get<double>();
    e.box.image_width = r.get<double>();
    e.box.image_height = r.get<double>();
    for (auto& c : e.code.values) c = r.get<double>();
    e.embedding.resize(d_feat);
    for (auto& v : e.embedding) v = r.get<float>();
    if (i > 0) {
      const auto& prev = entries.back();
      const bool ordered = prev.frame_index != e.frame_index ? prev.frame_index < e.frame_index
                                                             : prev.box_rank < e.box_rank;
      if (!ordered) throw FormatError("bank: records out of order", at);
    }
    entries.push_back(std::move(e));
  }

  LongTermBank bank(camera, d_feat, s, capacity);
  bank.set_extractor_seed(extractor_seed);
  bank.assign(std::move(entries));
  return bank;
}

void write_bank(const LongTermBank& bank, const std::filesystem::path& path) {
  binio::write_file(path, encode_bank(bank));
}

LongTermBank read_bank(const std::filesystem::path& path) {
  return decode_bank(binio::read_file(path));
}

}  // namespace camctx
