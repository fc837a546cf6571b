#pragma once

#include <array>
#include <chrono>
#include <cstdint>

namespace camctx {

// Calendar time of a frame. Seconds are carried for ordering but are not part
// of the spatiotemporal code.
struct Timestamp {
  int year = 2000;
  int month = 1;   // 1-12
  int day = 1;     // 1-31, validated by range only
  int hour = 0;    // 0-23
  int minute = 0;  // 0-59
  int second = 0;  // 0-59

  bool valid() const noexcept;

  // Seconds since 1970-01-01T00:00:00 (proleptic Gregorian, no leap seconds).
  std::int64_t to_epoch_seconds() const;
  static Timestamp from_epoch_seconds(std::int64_t seconds);

  friend bool operator==(const Timestamp&, const Timestamp&) = default;
};

// Box in pixel units, center/size parameterisation, plus the image it lives in.
struct BoxPx {
  double x_center = 0.0;
  double y_center = 0.0;
  double width = 0.0;
  double height = 0.0;
  double image_width = 0.0;
  double image_height = 0.0;

  double x_min() const noexcept { return x_center - 0.5 * width; }
  double x_max() const noexcept { return x_center + 0.5 * width; }
  double y_min() const noexcept { return y_center - 0.5 * height; }
  double y_max() const noexcept { return y_center + 0.5 * height; }
  double area() const noexcept { return width * height; }

  // Positive size, fully inside the image.
  bool valid() const noexcept;

  // Horizontal mirror within the image.
  BoxPx flipped() const noexcept;

  friend bool operator==(const BoxPx&, const BoxPx&) = default;
};

inline constexpr std::size_t kCodeLength = 9;

// Nine normalised components in fixed order: year, month, day, hour, minute,
// x_center, y_center, width, height. Each lies in [0, 1].
struct SpatioTemporalCode {
  std::array<double, kCodeLength> values{};

  double year() const noexcept { return values[0]; }
  double month() const noexcept { return values[1]; }
  double day() const noexcept { return values[2]; }
  double hour() const noexcept { return values[3]; }
  double minute() const noexcept { return values[4]; }
  double x_center() const noexcept { return values[5]; }
  double y_center() const noexcept { return values[6]; }
  double width() const noexcept { return values[7]; }
  double height() const noexcept { return values[8]; }

  friend bool operator==(const SpatioTemporalCode&, const SpatioTemporalCode&) = default;
};

inline constexpr int kCodeFirstYear = 1990;
inline constexpr int kCodeLastYear = 2030;

// [(year-1990)/40, month/12, day/31, hour/24, minute/60]. Throws RangeError for
// years outside [1990, 2030] and ParameterError for out-of-range fields.
std::array<double, 5> encode_datetime(const Timestamp& t);

// [x_center/W, y_center/H, width/W, height/H]. Throws ParameterError on a zero
// image dimension.
std::array<double, 4> encode_box(const BoxPx& b);

SpatioTemporalCode encode(const Timestamp& t, const BoxPx& b);

// Mirrors the horizontal centre; everything else is untouched.
SpatioTemporalCode flip_code(const SpatioTemporalCode& c) noexcept;

}  // namespace camctx
