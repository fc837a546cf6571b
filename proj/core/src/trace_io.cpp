#include <cstring>

#include "camctx/binio.hpp"
#include "camctx/error.hpp"
#include "camctx/trace.hpp"

namespace camctx {

namespace {

constexpr char kTraceMagic[8] = {'C', 'A', 'M', 'C', 'T', 'X', 'T', 'R'};
constexpr std::uint32_t kTraceVersion = 1;
constexpr std::size_t kTraceChecksumOffset = 12;
constexpr std::size_t kTraceBodyOffset = 20;

void put_box(binio::Writer& w, const BoxPx& b) {
  for (double v : {b.x_center, b.y_center, b.width, b.height, b.image_width, b.image_height}) w.put(v);
}

BoxPx get_box(binio::Reader& r) {
  BoxPx b;
  b.x_center = r.get<double>();
  b.y_center = r.get<double>();
  b.width = r.get<double>();
  b.height = r.get<double>();
  b.image_width = r.get<double>();
  b.image_height = r.get<double>();
  return b;
}

}  // namespace

std::vector<std::uint8_t> encode_trace(const TraceSet& set) {
  binio::Writer w;
  w.put_bytes(std::string_view(kTraceMagic, sizeof(kTraceMagic)));
  w.put(kTraceVersion);
  w.put(std::uint64_t{0});
  w.put_string(set.config.to_config_text());
  w.put(static_cast<std::uint32_t>(set.cameras.size()));
  for (const auto& cam : set.cameras) {
    w.put(cam.camera_id);
    w.put(static_cast<std::uint8_t>(cam.held_out ? 1 : 0));
    w.put(static_cast<std::uint32_t>(cam.resident_species.size()));
    for (std::size_t i = 0; i < cam.resident_species.size(); ++i) {
      w.put(static_cast<std::int32_t>(cam.resident_species[i]));
      w.put(cam.visit_hours[i]);
    }
    w.put(static_cast<std::uint32_t>(cam.distractor_lookalike.size()));
    for (int c : cam.distractor_lookalike) w.put(static_cast<std::int32_t>(c));
    w.put(static_cast<std::uint64_t>(cam.frames.size()));
    for (const auto& f : cam.frames) {
      w.put(f.frame_index);
      w.put(f.frame_id);
      w.put(f.time);
      w.put(f.burst);
      w.put(f.burst_position);
      w.put(f.burst_length);
      w.put(static_cast<std::uint32_t>(f.instances.size()));
      for (const auto& inst : f.instances) {
        w.put(static_cast<std::int32_t>(inst.class_id));
        w.put(static_cast<std::uint8_t>(inst.distractor ? 1 : 0));
        w.put(inst.individual);
        put_box(w, inst.box);
      }
    }
  }
  w.patch_u64(kTraceChecksumOffset, binio::fnv1a64(w.bytes().subspan(kTraceBodyOffset)));
  return std::move(w.buffer());
}

TraceSet decode_trace(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kTraceBodyOffset || std::memcmp(bytes.data(), kTraceMagic, sizeof(kTraceMagic)) != 0)
    throw FormatError("trace: bad magic", 0);
  binio::Reader r(bytes);
  r.seek(sizeof(kTraceMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kTraceVersion) throw FormatError("trace: unsupported version " + std::to_string(version), 8);
  const auto checksum = r.get<std::uint64_t>();
  if (binio::fnv1a64(bytes.subspan(kTraceBodyOffset)) != checksum)
    throw FormatError("trace: checksum mismatch", kTraceChecksumOffset);

  TraceSet set;
  const auto config_at = r.position();
  try {
    set.config = TraceConfig::from_config(KeyValueConfig::parse(r.get_string()));
  } catch (const ConfigError& e) {
    throw FormatError(std::string("trace: bad embedded config: ") + e.what(), config_at);
  }
  const auto n_cams = r.get<std::uint32_t>();
  for (std::uint32_t c = 0; c < n_cams; ++c) {
    CameraTrace cam;
    cam.camera_id = r.get<std::uint32_t>();
    cam.held_out = r.get<std::uint8_t>() != 0;
    const auto n_res = r.get<std::uint32_t>();
    r.require(static_cast<std::size_t>(n_res) * 12);
    for (std::uint32_t i = 0; i < n_res; ++i) {
      cam.resident_species.push_back(r.get<std::int32_t>());
      cam.visit_hours.push_back(r.get<double>());
    }
    const auto n_dis = r.get<std::uint32_t>();
    r.require(static_cast<std::size_t>(n_dis) * 4);
    for (std::uint32_t i = 0; i < n_dis; ++i) cam.distractor_lookalike.push_back(r.get<std::int32_t>());
    const auto n_frames = r.get<std::uint64_t>();
    if (n_frames > r.remaining() / 40) throw FormatError("trace: frame count exceeds file size", r.position());
    cam.frames.reserve(n_frames);
    for (std::uint64_t i = 0; i < n_frames; ++i) {
      Frame f;
      f.frame_index = r.get<std::uint64_t>();
      f.frame_id = r.get<std::uint64_t>();
      f.time = r.get<std::int64_t>();
      f.burst = r.get<std::uint32_t>();
      f.burst_position = r.get<std::uint32_t>();
      f.burst_length = r.get<std::uint32_t>();
      const auto n_inst = r.get<std::uint32_t>();
      r.require(static_cast<std::size_t>(n_inst) * 57);
      for (std::uint32_t k = 0; k < n_inst; ++k) {
        Instance inst;
        inst.class_id = r.get<std::int32_t>();
        inst.distractor = r.get<std::uint8_t>() != 0;
        inst.individual = r.get<std::uint32_t>();
        inst.box = get_box(r);
        f.instances.push_back(inst);
      }
      if (!cam.frames.empty() && f.time <= cam.frames.back().time)
        throw FormatError("trace: frame times not increasing", r.position());
      cam.frames.push_back(std::move(f));
    }
    set.cameras.push_back(std::move(cam));
  }
  if (r.remaining() != 0) throw FormatError("trace: trailing bytes", r.position());
  return set;
}

void write_trace(const TraceSet& set, const std::filesystem::path& path) {
  binio::write_file(path, encode_trace(set));
}

TraceSet read_trace(const std::filesystem::path& path) { return decode_trace(binio::read_file(path)); }

}  // namespace camctx
