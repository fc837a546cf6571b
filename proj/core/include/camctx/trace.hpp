#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "camctx/config.hpp"
#include "camctx/encoding.hpp"

namespace camctx {

// Synthetic static-camera world. Documented keys match the field names; see
// TraceConfig::known_keys() and configs/*.toml.
struct TraceConfig {
  // world
  std::uint32_t n_classes = 6;
  std::uint32_t n_cameras = 12;
  std::uint32_t test_cameras = 4;  // the last cameras are held out
  double duration_days = 30.0;
  int start_year = 2012;
  int start_month = 1;
  int start_day = 1;
  double triggers_per_day = 8.0;
  std::uint32_t burst_min = 1;
  std::uint32_t burst_max = 10;
  double empty_fraction = 0.75;
  std::uint32_t species_per_camera = 2;
  double visit_jitter_hours = 0.75;
  double stray_fraction = 0.1;   // visits by a non-resident species at a random hour
  double herd_continue = 0.35;   // P(another individual joins), geometric herd size
  std::uint32_t max_herd = 4;
  std::uint32_t residents_per_species = 3;  // habitual individuals per resident species, 0: all new
  std::uint32_t distractors_per_camera = 1;
  double distractor_presence = 0.8;
  double image_width = 640.0;
  double image_height = 480.0;
  double object_speed = 20.0;  // pixels per frame

  // frozen surrogate extractor
  std::uint32_t d_feat = 32;
  std::uint32_t n_proposals = 8;
  std::uint32_t grid = 2;            // spatial h = w of cropped features
  double instance_noise = 0.8;       // per individual, shared across its burst
  double feature_noise = 1.6;        // per frame and proposal
  double visit_noise = 0.0;          // per visit (burst), shared by its frames
  double distractor_likeness = 0.8;  // weight of the look-alike class prototype
  double background_noise = 1.0;

  std::uint64_t seed = 1;

  void validate() const;
  static TraceConfig from_config(const KeyValueConfig& cfg);
  std::string to_config_text() const;
  static std::vector<std::string_view> known_keys();

  std::int64_t start_time() const;
  std::int64_t end_time() const;

  friend bool operator==(const TraceConfig&, const TraceConfig&) = default;
};

struct Instance {
  int class_id = -1;  // -1 for distractors
  bool distractor = false;
  std::uint32_t individual = 0;  // unique within a camera
  BoxPx box;

  friend bool operator==(const Instance&, const Instance&) = default;
};

struct Frame {
  std::uint64_t frame_index = 0;  // position within the camera stream
  std::uint64_t frame_id = 0;     // unique across cameras
  std::int64_t time = 0;          // epoch seconds
  std::uint32_t burst = 0;
  std::uint32_t burst_position = 0;
  std::uint32_t burst_length = 0;
  std::vector<Instance> instances;

  Timestamp timestamp() const { return Timestamp::from_epoch_seconds(time); }
  bool has_object() const noexcept;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct CameraTrace {
  std::uint32_t camera_id = 0;
  bool held_out = false;
  std::vector<int> resident_species;
  std::vector<double> visit_hours;       // daily schedule, one per resident species
  std::vector<int> distractor_lookalike;  // one class per distractor
  std::vector<Frame> frames;

  friend bool operator==(const CameraTrace&, const CameraTrace&) = default;
};

constexpr std::uint64_t make_frame_id(std::uint32_t camera, std::uint64_t index) noexcept {
  return (static_cast<std::uint64_t>(camera) << 32) | index;
}

// Deterministic in cfg (including the seed). Throws ConfigError for a
// degenerate configuration.
std::vector<CameraTrace> generate_trace(const TraceConfig& cfg);

// Fraction of frames without a true object.
double empty_frame_fraction(std::span<const CameraTrace> traces);

struct TraceSet {
  TraceConfig config;
  std::vector<CameraTrace> cameras;

  friend bool operator==(const TraceSet&, const TraceSet&) = default;
};

// Trace file, version 1: magic "CAMCTXTR", u32 version, u64 checksum
// (FNV-1a over everything after the checksum field), config text, cameras.
std::vector<std::uint8_t> encode_trace(const TraceSet& set);
TraceSet decode_trace(std::span<const std::uint8_t> bytes);
void write_trace(const TraceSet& set, const std::filesystem::path& path);
TraceSet read_trace(const std::filesystem::path& path);

}  // namespace camctx
