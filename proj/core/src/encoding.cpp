#include "camctx/encoding.hpp"

#include "camctx/error.hpp"

namespace camctx {

namespace chr = std::chrono;

bool Timestamp::valid() const noexcept {
  return month >= 1 && month <= 12 && day >= 1 && day <= 31 && hour >= 0 && hour <= 23 &&
         minute >= 0 && minute <= 59 && second >= 0 && second <= 59;
}

std::int64_t Timestamp::to_epoch_seconds() const {
  const chr::year_month_day ymd{chr::year{year}, chr::month{static_cast<unsigned>(month)},
                                chr::day{static_cast<unsigned>(day)}};
  if (!ymd.ok()) throw RangeError("Timestamp: not a calendar date");
  const auto days = chr::sys_days{ymd}.time_since_epoch().count();
  return static_cast<std::int64_t>(days) * 86400 + hour * 3600 + minute * 60 + second;
}

Timestamp Timestamp::from_epoch_seconds(std::int64_t seconds) {
  std::int64_t days = seconds / 86400;
  std::int64_t rem = seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  const chr::year_month_day ymd{chr::sys_days{chr::days{days}}};
  Timestamp t;
  t.year = static_cast<int>(ymd.year());
  t.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
  t.day = static_cast<int>(static_cast<unsigned>(ymd.day()));
  t.hour = static_cast<int>(rem / 3600);
  t.minute = static_cast<int>((rem % 3600) / 60);
  t.second = static_cast<int>(rem % 60);
  return t;
}

bool BoxPx::valid() const noexcept {
  return width > 0.0 && height > 0.0 && image_width > 0.0 && image_height > 0.0 &&
         x_min() >= 0.0 && y_min() >= 0.0 && x_max() <= image_width && y_max() <= image_height;
}

BoxPx BoxPx::flipped() const noexcept {
  BoxPx b = *this;
  b.x_center = image_width - x_center;
  return b;
}

std::array<double, 5> encode_datetime(const Timestamp& t) {
  if (t.year < kCodeFirstYear || t.year > kCodeLastYear)
    throw RangeError("encode_datetime: year " + std::to_string(t.year) + " outside [1990, 2030]");
  if (!t.valid()) throw ParameterError("encode_datetime: invalid timestamp field");
  return {static_cast<double>(t.year - kCodeFirstYear) / (kCodeLastYear - kCodeFirstYear),
          t.month / 12.0, t.day / 31.0, t.hour / 24.0, t.minute / 60.0};
}

std::array<double, 4> encode_box(const BoxPx& b) {
  if (!(b.image_width > 0.0) || !(b.image_height > 0.0))
    throw ParameterError("encode_box: image dimensions must be positive");
  return {b.x_center / b.image_width, b.y_center / b.image_height, b.width / b.image_width,
          b.height / b.image_height};
}

SpatioTemporalCode encode(const Timestamp& t, const BoxPx& b) {
  const auto dt = encode_datetime(t);
  const auto bx = encode_box(b);
  SpatioTemporalCode c;
  for (std::size_t i = 0; i < 5; ++i) c.values[i] = dt[i];
  for (std::size_t i = 0; i < 4; ++i) c.values[5 + i] = bx[i];
  return c;
}

SpatioTemporalCode flip_code(const SpatioTemporalCode& c) noexcept {
  SpatioTemporalCode out = c;
  out.values[5] = 1.0 - c.values[5];
  return out;
}

}  // namespace camctx
