#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "camctx/membank.hpp"

namespace camctx {

// Long-term bank file, version 1. All integers and reals little-endian.
//
//   offset size  field
//   0      8     magic "CAMCTXBK"
//   8      4     u32 version (1)
//   12     4     u32 camera_id
//   16     4     u32 d_feat
//   20     1     u8 strategy kind (1 top_k, 2 positive_only, 3 stride, 4 all, 5 positive_oracle)
//   21     3     reserved, zero
//   24     4     u32 strategy k (top_k) or stride (stride)
//   28     4     u32 stride base
//   32     8     f64 positive_only score threshold
//   40     8     u64 capacity
//   48     8     u64 entry count
//   56     8     u64 checksum: FNV-1a 64 over bytes [0,56) ++ [64, end)
//   64     8     u64 extractor seed
//   72     ...   entry records, each 160 + 4*d_feat bytes:
//                u64 frame_index, u64 source_frame_id,
//                u16 year, u8 month, u8 day, u8 hour, u8 minute, u8 second, u8 reserved,
//                u32 box_rank, i32 predicted_class (-1 = none), f64 score,
//                f64 x_center, y_center, width, height, image_width, image_height,
//                f64 code[9], f32 embedding[d_feat]
inline constexpr char kBankMagic[8] = {'C', 'A', 'M', 'C', 'T', 'X', 'B', 'K'};
inline constexpr std::uint32_t kBankVersion = 1;
inline constexpr std::size_t kBankHeaderSize = 72;
inline constexpr std::size_t kBankChecksumOffset = 56;

std::size_t bank_record_size(std::size_t d_feat) noexcept;

std::vector<std::uint8_t> encode_bank(const LongTermBank& bank);
// Throws FormatError (with the failing byte offset) on bad magic, unsupported
// version, truncation, trailing bytes, inconsistent fields or checksum mismatch.
LongTermBank decode_bank(std::span<const std::uint8_t> bytes);

void write_bank(const LongTermBank& bank, const std::filesystem::path& path);
LongTermBank read_bank(const std::filesystem::path& path);

}  // namespace camctx
