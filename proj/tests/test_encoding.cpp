#include "doctest.h"

#include "camctx/encoding.hpp"
#include "camctx/error.hpp"
#include "camctx/rng.hpp"

using namespace camctx;

TEST_SUITE("encoding") {

TEST_CASE("datetime components are the plain ratios") {
  const auto c = encode_datetime(Timestamp{2010, 6, 31, 12, 30, 59});
  CHECK(c[0] == 0.5);
  CHECK(c[1] == 0.5);
  CHECK(c[2] == 1.0);
  CHECK(c[3] == 0.5);
  CHECK(c[4] == 0.5);

  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const Timestamp t{1990 + static_cast<int>(rng.below(41)), 1 + static_cast<int>(rng.below(12)),
                      1 + static_cast<int>(rng.below(28)), static_cast<int>(rng.below(24)),
                      static_cast<int>(rng.below(60)), 0};
    const auto e = encode_datetime(t);
    CHECK(e[0] == (t.year - 1990) / 40.0);
    CHECK(e[1] == t.month / 12.0);
    CHECK(e[2] == t.day / 31.0);
    CHECK(e[3] == t.hour / 24.0);
    CHECK(e[4] == t.minute / 60.0);
  }
}

TEST_CASE("datetime boundaries") {
  CHECK(encode_datetime(Timestamp{1990, 1, 1, 0, 0, 0})[0] == 0.0);
  CHECK(encode_datetime(Timestamp{2030, 12, 31, 23, 59, 59})[0] == 1.0);
  const auto lo = encode_datetime(Timestamp{1990, 1, 1, 0, 0, 0});
  CHECK(lo[1] == 1.0 / 12.0);
  CHECK(lo[2] == 1.0 / 31.0);
  CHECK(lo[3] == 0.0);
  CHECK(lo[4] == 0.0);
  const auto hi = encode_datetime(Timestamp{2030, 12, 31, 23, 59, 0});
  CHECK(hi[1] == 1.0);
  CHECK(hi[3] == 23.0 / 24.0);
  CHECK(hi[4] == 59.0 / 60.0);
  CHECK_THROWS_AS(encode_datetime(Timestamp{1989, 12, 31, 0, 0, 0}), RangeError);
  CHECK_THROWS_AS(encode_datetime(Timestamp{2031, 1, 1, 0, 0, 0}), RangeError);
  CHECK_THROWS_AS(encode_datetime(Timestamp{2000, 13, 1, 0, 0, 0}), ParameterError);
  CHECK_THROWS_AS(encode_datetime(Timestamp{2000, 1, 1, 24, 0, 0}), ParameterError);
}

TEST_CASE("box components are ratios to the image") {
  const BoxPx b{320, 120, 64, 48, 640, 480};
  const auto c = encode_box(b);
  CHECK(c[0] == 0.5);
  CHECK(c[1] == 0.25);
  CHECK(c[2] == 0.1);
  CHECK(c[3] == 0.1);
  const auto full = encode_box(BoxPx{320, 240, 640, 480, 640, 480});
  CHECK(full[2] == 1.0);
  CHECK(full[3] == 1.0);
  CHECK_THROWS_AS(encode_box(BoxPx{1, 1, 1, 1, 0, 480}), ParameterError);
  CHECK_THROWS_AS(encode_box(BoxPx{1, 1, 1, 1, 640, 0}), ParameterError);
}

TEST_CASE("code order: datetime then box") {
  const Timestamp t{2010, 6, 31, 12, 30, 0};
  const BoxPx b{320, 120, 64, 48, 640, 480};
  const auto c = encode(t, b);
  CHECK(c.values == std::array<double, 9>{0.5, 0.5, 1.0, 0.5, 0.5, 0.5, 0.25, 0.1, 0.1});
  for (double v : c.values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("horizontal flip of boxes and codes") {
  const BoxPx b{100, 200, 50, 60, 640, 480};
  const BoxPx f = b.flipped();
  CHECK(f.x_center == 540);
  CHECK(f.y_center == 200);
  CHECK(f.flipped() == b);
  const auto c = encode(Timestamp{2012, 3, 4, 5, 6, 7}, b);
  const auto fc = flip_code(c);
  CHECK(fc.x_center() == 1.0 - c.x_center());
  const auto back = flip_code(fc);
  CHECK(std::abs(back.x_center() - c.x_center()) <= 1e-15);
  for (std::size_t i = 0; i < kCodeLength; ++i)
    if (i != 5) CHECK(back.values[i] == c.values[i]);
  CHECK(encode(Timestamp{2012, 3, 4, 5, 6, 7}, f).x_center() == doctest::Approx(fc.x_center()).epsilon(1e-15));
}

TEST_CASE("epoch conversion round trip") {
  Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const auto s = static_cast<std::int64_t>(rng.below(1900000000ULL)) + 631152000;  // 1990..
    const auto t = Timestamp::from_epoch_seconds(s);
    CHECK(t.valid());
    CHECK(t.to_epoch_seconds() == s);
  }
  CHECK(Timestamp{1970, 1, 1, 0, 0, 0}.to_epoch_seconds() == 0);
  CHECK(Timestamp{2000, 3, 1, 0, 0, 0}.to_epoch_seconds() == 951868800);
}

}  // TEST_SUITE
