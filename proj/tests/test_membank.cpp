#include <chrono>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"

#include "camctx/bank_io.hpp"
#include "camctx/binio.hpp"
#include "camctx/error.hpp"
#include "camctx/membank.hpp"
#include "camctx/rng.hpp"

using namespace camctx;

namespace {

const Timestamp kStart{2012, 1, 1, 0, 0, 0};

std::vector<ScoredDetection> random_detections(Rng& rng, std::size_t n, std::size_t d) {
  std::vector<ScoredDetection> out(n);
  for (auto& det : out) {
    det.embedding.resize(d);
    for (auto& v : det.embedding) v = rng.normal();
    det.box = BoxPx{rng.uniform(50, 590), rng.uniform(50, 430), rng.uniform(10, 90), rng.uniform(10, 90), 640, 480};
    det.score = rng.uniform();
    if (rng.bernoulli(0.5)) det.predicted_class = static_cast<int>(rng.below(6));
  }
  return out;
}

std::vector<FrameDetections> random_frames(std::uint64_t seed, std::size_t n_frames, std::size_t per_frame,
                                           std::size_t d) {
  Rng rng(seed);
  std::vector<FrameDetections> frames;
  std::int64_t t = kStart.to_epoch_seconds();
  for (std::size_t i = 0; i < n_frames; ++i) {
    FrameDetections f;
    f.camera_id = 3;
    f.frame_index = i;
    f.frame_id = 1000 + i;
    t += 1 + static_cast<std::int64_t>(rng.below(600));
    f.timestamp = Timestamp::from_epoch_seconds(t);
    f.detections = random_detections(rng, per_frame, d);
    f.has_object = rng.bernoulli(0.4);
    frames.push_back(std::move(f));
  }
  return frames;
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("camctx_test_" + name);
}

}  // namespace

TEST_SUITE("membank") {

TEST_CASE("strategy text round trip and validation") {
  for (const char* s : {"top_k:1", "top_k:8", "stride:2", "stride:3:1", "positive_only:0.5", "positive_oracle", "all"}) {
    const auto st = CurationStrategy::parse(s);
    CHECK(CurationStrategy::parse(st.to_string()) == st);
  }
  for (const char* s : {"", "top_k", "top_k:0", "top_k:x", "stride:0", "stride:2:2", "positive_only:1.5", "bogus"})
    CHECK_THROWS_AS(CurationStrategy::parse(s), ConfigError);
}

TEST_CASE("curate_frame ranks by score, ties by input order") {
  std::vector<ScoredDetection> dets(4);
  const double scores[] = {0.2, 0.9, 0.9, 0.5};
  for (std::size_t i = 0; i < 4; ++i) {
    dets[i].embedding = {static_cast<double>(i)};
    dets[i].box = BoxPx{100, 100, 20, 20, 640, 480};
    dets[i].score = scores[i];
  }
  const auto top2 = curate_frame(dets, CurationStrategy::top(2), 5, 50, kStart);
  REQUIRE(top2.size() == 2);
  CHECK(top2[0].embedding[0] == 1.0f);
  CHECK(top2[1].embedding[0] == 2.0f);
  CHECK(top2[0].box_rank == 0);
  CHECK(top2[1].box_rank == 1);
  CHECK(top2[0].frame_index == 5);
  CHECK(top2[0].source_frame_id == 50);

  CHECK(curate_frame(dets, CurationStrategy::positive(0.5), 0, 0, kStart).size() == 3);
  CHECK(curate_frame(dets, CurationStrategy::keep_all(), 0, 0, kStart).size() == 4);
  CHECK(curate_frame(dets, CurationStrategy::oracle_positive(), 0, 0, kStart, false).empty());
  CHECK(curate_frame(dets, CurationStrategy::oracle_positive(), 0, 0, kStart, true).size() == 1);
  CHECK(curate_frame({}, CurationStrategy::top(3), 0, 0, kStart).empty());
}

TEST_CASE("stride keeps half of top_k:1") {
  const auto frames = random_frames(4, 101, 3, 4);
  const auto top = build_long_term(frames, CurationStrategy::top(1), 4);
  const auto half = build_long_term(frames, CurationStrategy::strided(2), 4);
  CHECK(top.size() == 101);
  CHECK(std::llabs(static_cast<long long>(2 * half.size()) - static_cast<long long>(top.size())) <= 2);
}

TEST_CASE("bank stays sorted and evicts oldest") {
  const auto frames = random_frames(5, 50, 2, 3);
  const auto bank = build_long_term(frames, CurationStrategy::keep_all(), 3, 40);
  REQUIRE(bank.size() == 40);
  CHECK(bank.entries().front().frame_index == 30);
  for (std::size_t i = 1; i < bank.size(); ++i) {
    const auto& a = bank.entries()[i - 1];
    const auto& b = bank.entries()[i];
    CHECK((a.frame_index < b.frame_index || (a.frame_index == b.frame_index && a.box_rank < b.box_rank)));
  }
  LongTermBank copy = bank;
  ContextEntry early = bank.entries().front();
  early.frame_index = 0;
  CHECK_THROWS_AS(copy.append(early), InputError);
  CHECK(copy == bank);
}

TEST_CASE("build_long_term rejects mixed cameras and unordered frames") {
  auto frames = random_frames(6, 5, 1, 2);
  frames[2].camera_id = 9;
  CHECK_THROWS_AS(build_long_term(frames, CurationStrategy::top(1), 2), InputError);
  frames = random_frames(6, 5, 1, 2);
  std::swap(frames[1], frames[3]);
  CHECK_THROWS_AS(build_long_term(frames, CurationStrategy::top(1), 2), InputError);
}

TEST_CASE("windowed query") {
  const auto frames = random_frames(7, 200, 1, 2);
  const auto bank = build_long_term(frames, CurationStrategy::top(1), 2);
  const BankContext ctx(bank);
  Rng rng(1);
  for (int trial = 0; trial < 50; ++trial) {
    const auto& centre = bank.entries()[rng.below(bank.size())];
    const BankQuery q{centre.time(), static_cast<std::int64_t>(rng.below(5000)), rng.bernoulli(0.5)};
    const auto rows = query_bank(bank, q);
    std::size_t expected = 0;
    for (const auto& e : bank.entries()) {
      const auto dt = e.time() - q.time;
      if (dt >= -q.horizon && dt <= (q.causal ? 0 : q.horizon)) ++expected;
    }
    CHECK(rows.features.rows() == expected);
    CHECK(rows.features.cols() == 2 + kCodeLength);
    CHECK(ctx.rows_for(q).rows() == expected);
    for (auto t : rows.times) {
      CHECK(t >= q.time - q.horizon);
      CHECK(t <= q.time + q.horizon);
    }
  }
}

TEST_CASE("flip_bank mirrors codes only") {
  const auto bank = build_long_term(random_frames(8, 20, 2, 3), CurationStrategy::top(2), 3);
  const auto flipped = flip_bank(bank);
  REQUIRE(flipped.size() == bank.size());
  for (std::size_t i = 0; i < bank.size(); ++i) {
    CHECK(flipped.entries()[i].embedding == bank.entries()[i].embedding);
    CHECK(flipped.entries()[i].code.x_center() == doctest::Approx(1.0 - bank.entries()[i].code.x_center()));
  }
}

TEST_CASE("short-term memory stacking") {
  Matrix a(3, 2), b(3, 2);
  a(1, 1) = 4.0;
  b(2, 0) = 7.0;
  const MatrixView views[] = {a.view(), b.view()};
  const std::uint64_t ids[] = {10, 11};
  const auto st = build_short_term(views, ids);
  CHECK(st.frames() == 2);
  CHECK(st.features.rows() == 6);
  CHECK(st.frame_block(1)(2, 0) == 7.0);
  Matrix bad(2, 2);
  const MatrixView mixed[] = {a.view(), bad.view()};
  CHECK_THROWS_AS(build_short_term(mixed, ids), ShapeError);
}

}  // TEST_SUITE

TEST_SUITE("bank_io") {

TEST_CASE("round trip is bitwise up to 8500 entries") {
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{17}, std::size_t{8500}}) {
    const auto frames = random_frames(100 + n, n, 1, 16);
    auto bank = build_long_term(frames, CurationStrategy::top(1), 16);
    bank.set_extractor_seed(12345);
    REQUIRE(bank.size() == n);
    const auto bytes = encode_bank(bank);
    CHECK(bytes.size() == kBankHeaderSize + n * bank_record_size(16));
    const auto back = decode_bank(bytes);
    CHECK(back == bank);
    CHECK(encode_bank(back) == bytes);

    const auto path = temp_file("bank_" + std::to_string(n) + ".bin");
    write_bank(bank, path);
    CHECK(read_bank(path) == bank);
    std::filesystem::remove(path);
  }
  CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(10));
}

TEST_CASE("every strategy kind survives serialisation") {
  const auto frames = random_frames(9, 30, 3, 4);
  for (const auto& s : {CurationStrategy::top(2), CurationStrategy::positive(0.3), CurationStrategy::strided(3, 1),
                        CurationStrategy::keep_all(), CurationStrategy::oracle_positive()}) {
    const auto bank = build_long_term(frames, s, 4, 50);
    CHECK(decode_bank(encode_bank(bank)) == bank);
  }
}

TEST_CASE("corruption is rejected") {
  const auto bank = build_long_term(random_frames(10, 40, 1, 8), CurationStrategy::top(1), 8);
  const auto good = encode_bank(bank);

  SUBCASE("bad magic") {
    auto b = good;
    b[0] = 'X';
    CHECK_THROWS_AS(decode_bank(b), FormatError);
  }
  SUBCASE("bad version") {
    auto b = good;
    b[8] = 2;
    CHECK_THROWS_AS(decode_bank(b), FormatError);
  }
  SUBCASE("truncated") {
    for (std::size_t len : {std::size_t{0}, std::size_t{7}, kBankHeaderSize - 1, good.size() - 1}) {
      std::vector<std::uint8_t> b(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(len));
      CHECK_THROWS_AS(decode_bank(b), FormatError);
    }
  }
  SUBCASE("trailing bytes") {
    auto b = good;
    b.push_back(0);
    CHECK_THROWS_AS(decode_bank(b), FormatError);
  }
  SUBCASE("any flipped payload byte") {
    Rng rng(2);
    for (int i = 0; i < 200; ++i) {
      auto b = good;
      const auto pos = rng.below(b.size());
      b[pos] ^= static_cast<std::uint8_t>(1 + rng.below(255));
      CHECK_THROWS_AS(decode_bank(b), FormatError);
    }
  }
  SUBCASE("failed read leaves the caller's bank untouched") {
    const auto path = temp_file("corrupt.bin");
    auto b = good;
    b[kBankHeaderSize + 3] ^= 0x40;
    binio::write_file(path, b);
    LongTermBank held = bank;
    try {
      held = read_bank(path);
      FAIL("corrupt file accepted");
    } catch (const FormatError& e) {
      CHECK(e.offset() <= b.size());
    }
    CHECK(held == bank);
    std::filesystem::remove(path);
    CHECK_THROWS(read_bank(path));
  }
}

}  // TEST_SUITE
