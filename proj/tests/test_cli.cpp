#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "camctx/bank_io.hpp"
#include "cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = camctx::cli::run_command(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

// Scratch directory with a small world config.
struct Scratch {
  fs::path dir;
  Scratch() {
    static int counter = 0;
    dir = fs::temp_directory_path() / ("camctx_cli_" + std::to_string(counter++));
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "small.toml") << "[trace]\nn_cameras = 3\ntest_cameras = 1\nduration_days = 3\n"
                                         "triggers_per_day = 4\n\n[train]\nsteps = 20\nclips_per_batch = 4\n";
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

// synth gen + bank build + train into s.
void pipeline(const Scratch& s, const std::string& tag) {
  REQUIRE(run({"synth", "gen", "--config", s / "small.toml", "--seed", "11", "--out", s / (tag + "t.bin")}).code == 0);
  REQUIRE(run({"bank", "build", "--trace", s / (tag + "t.bin"), "--strategy", "top_k:1", "--extractor-seed", "7",
               "--out-dir", s / (tag + "banks")})
              .code == 0);
  const auto r = run({"train", "--trace", s / (tag + "t.bin"), "--banks", s / (tag + "banks"), "--config",
                      s / "small.toml", "--mode", "st+lt", "--horizon", "1d", "--seed", "5", "--out", s / (tag + "m.bin")});
  REQUIRE_MESSAGE(r.code == 0, r.err);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 1 and name the offending flag") {
  CHECK(run({}).code == 1);
  CHECK(run({"frobnicate"}).code == 1);
  const auto r = run({"synth", "gen", "--config", "x.toml", "--seed", "1", "--out", "t.bin", "--bogus-flag", "3"});
  CHECK(r.code == 1);
  CHECK(r.err.find("--bogus-flag") != std::string::npos);
  CHECK(run({"eval", "--trace", "t", "--banks", "b", "--model", "m", "--mode", "best"}).code == 1);
  CHECK(run({"eval", "--trace", "t", "--banks", "b", "--model", "m", "--horizon", "1fortnight"}).code == 1);
  CHECK(run({"bank", "build", "--trace", "t", "--out-dir", "b", "--strategy", "stride:0"}).code == 1);
}

TEST_CASE("seed is mandatory for generate and train") {
  const auto g = run({"synth", "gen", "--config", "x.toml", "--out", "t.bin"});
  CHECK(g.code == 1);
  CHECK(g.err.find("--seed") != std::string::npos);
  const auto t = run({"train", "--trace", "t", "--banks", "b", "--out", "m.bin"});
  CHECK(t.code == 1);
  CHECK(t.err.find("--seed") != std::string::npos);
}

TEST_CASE("help lists flags with defaults") {
  const auto top = run({"--help"});
  CHECK(top.code == 0);
  for (const char* sub : {"synth", "bank", "train", "eval", "report"}) CHECK(top.out.find(sub) != std::string::npos);

  const auto b = run({"bank", "build", "--help"});
  CHECK(b.code == 0);
  for (const char* flag : {"--trace", "--strategy", "--extractor-seed", "--capacity", "--out-dir", "top_k:1", "8500"})
    CHECK_MESSAGE(b.out.find(flag) != std::string::npos, flag);

  const auto t = run({"train", "--help"});
  for (const char* flag : {"--seed", "--mode", "--horizon", "1month", "st+lt", "--steps", "--lr"})
    CHECK_MESSAGE(t.out.find(flag) != std::string::npos, flag);

  const auto e = run({"eval", "--help"});
  for (const char* flag : {"--mode", "--horizon", "--split", "--json", "test"})
    CHECK_MESSAGE(e.out.find(flag) != std::string::npos, flag);

  const auto f = run({"report", "fp", "--help"});
  CHECK(f.out.find("--bins") != std::string::npos);
  const auto a = run({"report", "attend", "--help"});
  CHECK(a.out.find("--threshold") != std::string::npos);
}

TEST_CASE("missing and corrupt inputs exit 2") {
  Scratch s;
  CHECK(run({"synth", "gen", "--config", s / "absent.toml", "--seed", "1", "--out", s / "t.bin"}).code == 2);
  std::ofstream(s / "bad.toml") << "[trace]\nwarp_factor = 9\n";
  CHECK(run({"synth", "gen", "--config", s / "bad.toml", "--seed", "1", "--out", s / "t.bin"}).code == 2);
  std::ofstream(s / "junk.bin") << "not a trace";
  CHECK(run({"bank", "build", "--trace", s / "junk.bin", "--out-dir", s / "b"}).code == 2);

  pipeline(s, "");
  std::vector<std::string> ev{"eval", "--trace", s / "t.bin", "--banks", s / "banks", "--model", s / "m.bin"};
  REQUIRE(run(ev).code == 0);

  // Flip one byte in a bank file.
  const auto bank = fs::directory_iterator(s.dir / "banks")->path();
  auto bytes = slurp(bank);
  bytes[bytes.size() / 2] ^= 0x5a;
  std::ofstream(bank, std::ios::binary) << bytes;
  const auto r = run(ev);
  CHECK(r.code == 2);
  CHECK_FALSE(r.err.empty());

  CHECK(run({"eval", "--trace", s / "t.bin", "--banks", s / "nowhere", "--model", s / "m.bin"}).code == 2);
  CHECK(run({"eval", "--trace", s / "t.bin", "--banks", s / "banks", "--model", s / "junk.bin"}).code == 2);
}

TEST_CASE("stride:2 keeps half the entries of top_k:1") {
  Scratch s;
  REQUIRE(run({"synth", "gen", "--config", s / "small.toml", "--seed", "11", "--out", s / "t.bin"}).code == 0);
  REQUIRE(run({"bank", "build", "--trace", s / "t.bin", "--strategy", "top_k:1", "--out-dir", s / "k"}).code == 0);
  REQUIRE(run({"bank", "build", "--trace", s / "t.bin", "--strategy", "stride:2", "--out-dir", s / "s"}).code == 0);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(s.dir / "k")) {
    const auto name = e.path().filename();
    const auto nk = static_cast<long>(camctx::read_bank(e.path()).size());
    const auto ns = static_cast<long>(camctx::read_bank(s.dir / "s" / name).size());
    CHECK(nk > 10);
    CHECK(std::abs(2 * ns - nk) <= 2);
    ++files;
  }
  CHECK(files == 3);
}

TEST_CASE("every subcommand is byte-deterministic") {
  Scratch s;
  pipeline(s, "a_");
  pipeline(s, "b_");
  CHECK(slurp(s / "a_t.bin") == slurp(s / "b_t.bin"));
  CHECK(slurp(s / "a_m.bin") == slurp(s / "b_m.bin"));
  for (const auto& e : fs::directory_iterator(s.dir / "a_banks"))
    CHECK(slurp(e.path()) == slurp(s.dir / "b_banks" / e.path().filename()));

  for (const std::string tag : {"a_", "b_"}) {
    const std::vector<std::string> in{"--trace", s / (tag + "t.bin"), "--banks", s / (tag + "banks"), "--model",
                                      s / (tag + "m.bin")};
    auto with = [&](std::vector<std::string> head, std::vector<std::string> tail) {
      head.insert(head.end(), in.begin(), in.end());
      head.insert(head.end(), tail.begin(), tail.end());
      return run(head);
    };
    REQUIRE(with({"eval"}, {"--mode", "st+lt", "--out", s / (tag + "eval.txt")}).code == 0);
    REQUIRE(with({"eval"}, {"--mode", "majvote", "--json", "--out", s / (tag + "eval.json")}).code == 0);
    REQUIRE(with({"report", "attend"}, {"--out", s / (tag + "attend.csv")}).code == 0);
    REQUIRE(with({"report", "fp"}, {"--out", s / (tag + "fp.csv")}).code == 0);
  }
  for (const char* f : {"eval.txt", "eval.json", "attend.csv", "fp.csv"}) {
    const auto a = slurp(s / (std::string("a_") + f));
    CHECK_FALSE(a.empty());
    CHECK_MESSAGE(a == slurp(s / (std::string("b_") + f)), f);
  }
  CHECK(slurp(s / "a_fp.csv").rfind("score_lo,score_hi,false_positives", 0) == 0);
}

}  // TEST_SUITE
