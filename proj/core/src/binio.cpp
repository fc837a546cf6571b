#include "camctx/binio.hpp"

#include <fstream>
#include <iterator>
#include <system_error>

namespace camctx::binio {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes, std::uint64_t state) noexcept {
  for (auto b : bytes) {
    state ^= b;
    state *= 0x100000001b3ULL;
  }
  return state;
}

void Writer::patch_u64(std::size_t offset, std::uint64_t value) {
  for (std::size_t i = 0; i < 8; ++i) {
    bytes_.at(offset + i) = static_cast<std::uint8_t>(value & 0xffu);
    value >>= 8;
  }
}

void Reader::require(std::size_t n) const {
  if (bytes_.size() - pos_ < n) throw FormatError("truncated input", pos_);
}

void Reader::seek(std::size_t pos) {
  if (pos > bytes_.size()) throw FormatError("seek past end", pos);
  pos_ = pos;
}

std::string Reader::get_bytes(std::size_t n) {
  require(n);
  std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
  pos_ += n;
  return s;
}

std::string Reader::get_string(std::size_t max_length) {
  const auto at = pos_;
  const auto n = get<std::uint32_t>();
  if (n > max_length) throw FormatError("string length out of range", at);
  return get_bytes(n);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw InputError("cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace camctx::binio
