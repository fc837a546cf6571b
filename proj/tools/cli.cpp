#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "camctx/bank_io.hpp"
#include "camctx/benchmark.hpp"
#include "camctx/binio.hpp"
#include "camctx/error.hpp"

namespace camctx::cli {

namespace fs = std::filesystem;

namespace {

// Raised for problems with the files a command reads (exit code 2).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const std::vector<std::string> kModes{"sf", "st", "lt", "st+lt", "single", "majvote", "stspatial"};

std::string bank_file_name(std::uint32_t camera) { return "bank_" + std::to_string(camera) + ".bin"; }

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  const std::vector<std::uint8_t> bytes(text.begin(), text.end());
  binio::write_file(path, bytes);
}

std::vector<LongTermBank> read_banks(const std::string& dir) {
  if (!fs::is_directory(dir)) throw DataError("bank directory '" + dir + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir)) {
    const auto name = e.path().filename().string();
    if (e.is_regular_file() && name.rfind("bank_", 0) == 0 && e.path().extension() == ".bin") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<LongTermBank> banks;
  for (const auto& f : files) banks.push_back(read_bank(f));
  return banks;
}

// Extractor seed shared by all banks, or `fallback` without banks.
std::uint64_t banks_extractor_seed(const std::vector<LongTermBank>& banks, std::uint64_t fallback) {
  if (banks.empty()) return fallback;
  const auto seed = banks.front().extractor_seed();
  for (const auto& b : banks)
    if (b.extractor_seed() != seed) throw DataError("banks were built with different extractor seeds");
  return seed;
}

std::vector<PreparedCamera> load_cameras(const TraceSet& trace, std::uint64_t extractor_seed,
                                         const std::vector<LongTermBank>& banks, const std::string& split) {
  std::vector<PreparedCamera> out;
  if (split == "train" || split == "all") out = prepare_cameras(trace, extractor_seed, banks, false);
  if (split == "test" || split == "all") {
    auto test = prepare_cameras(trace, extractor_seed, banks, true);
    for (auto& c : test) out.push_back(std::move(c));
  }
  if (out.empty()) throw DataError("split '" + split + "' has no cameras");
  return out;
}

BenchmarkConfig load_config(const std::string& path) {
  if (path.empty()) return BenchmarkConfig{};
  if (!fs::exists(path)) throw DataError("config file '" + path + "' does not exist");
  return BenchmarkConfig::load(path);
}

std::int64_t horizon_or(const std::string& text, std::int64_t fallback) {
  return text == "model" ? fallback : parse_duration(text);
}

// CLI11 validator for --horizon values.
struct HorizonValidator : CLI::Validator {
  explicit HorizonValidator(bool allow_model) {
    name_ = "HORIZON";
    func_ = [allow_model](const std::string& s) -> std::string {
      if (allow_model && s == "model") return {};
      try {
        parse_duration(s);
        return {};
      } catch (const ConfigError& e) {
        return e.what();
      }
    };
  }
};

struct StrategyValidator : CLI::Validator {
  StrategyValidator() {
    name_ = "STRATEGY";
    func_ = [](const std::string& s) -> std::string {
      try {
        CurationStrategy::parse(s);
        return {};
      } catch (const ConfigError& e) {
        return e.what();
      }
    };
  }
};

std::string report_json(const EvalReport& r, const std::string& method, std::int64_t horizon) {
  nlohmann::ordered_json j;
  j["method"] = method;
  j["horizon"] = format_duration(horizon);
  j["iou_threshold"] = r.iou_threshold;
  j["map"] = r.map;
  j["ar_at_1"] = r.ar_at_1;
  j["recall_all"] = r.recall_all;
  j["true_positives"] = r.true_positives;
  j["false_positives"] = r.false_positives;
  auto& classes = j["classes"];
  classes = nlohmann::ordered_json::array();
  for (std::size_t c = 0; c < r.class_ap.size(); ++c) {
    nlohmann::ordered_json e;
    e["class"] = c;
    e["ap"] = std::isnan(r.class_ap[c]) ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(r.class_ap[c]);
    e["ground_truth"] = r.class_ground_truth[c];
    e["detections"] = r.class_detections[c];
    classes.push_back(e);
  }
  return j.dump(2) + "\n";
}

struct Inputs {
  std::string trace;
  std::string banks;
  std::string model;
  std::string split = "test";
};

void add_inputs(CLI::App* cmd, Inputs& in) {
  cmd->add_option("--trace", in.trace, "Trace file from `synth gen`")->required();
  cmd->add_option("--banks", in.banks, "Directory of bank files from `bank build`")->required();
  cmd->add_option("--model", in.model, "Model file from `train`")->required();
  cmd->add_option("--split", in.split, "Cameras to run on")->check(CLI::IsMember({"test", "train", "all"}));
}

struct Loaded {
  TraceSet trace;
  DetectorModel model;
  std::vector<PreparedCamera> cameras;
};

Loaded load_inputs(const Inputs& in) {
  Loaded l;
  l.trace = read_trace(in.trace);
  l.model = read_model(in.model);
  const auto banks = read_banks(in.banks);
  if (banks_extractor_seed(banks, l.model.extractor_seed) != l.model.extractor_seed)
    throw DataError("banks and model disagree on the extractor seed");
  if (l.model.d_feat() != l.trace.config.d_feat || l.model.n_classes != l.trace.config.n_classes)
    throw DataError("model shape does not match the trace");
  l.cameras = load_cameras(l.trace, l.model.extractor_seed, banks, in.split);
  return l;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Context-aware detection on synthetic static-camera traces", "camctx"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough(false);

  std::function<void()> action;

  // synth gen
  auto* synth = app.add_subcommand("synth", "Synthetic traces");
  synth->require_subcommand(1);
  auto* gen = synth->add_subcommand("gen", "Generate a trace from a config file");
  std::string gen_config, gen_out;
  std::uint64_t gen_seed = 0;
  gen->add_option("--config", gen_config, "Config file; its [trace] section is used")->required();
  gen->add_option("--seed", gen_seed, "Trace seed (overrides trace.seed)")->required();
  gen->add_option("--out", gen_out, "Output trace file")->required();
  gen->callback([&] {
    action = [&] {
      auto cfg = load_config(gen_config);
      cfg.trace.seed = gen_seed;
      TraceSet set{cfg.trace, generate_trace(cfg.trace)};
      write_trace(set, gen_out);
      std::size_t frames = 0;
      for (const auto& c : set.cameras) frames += c.frames.size();
      out << "cameras " << set.cameras.size() << " frames " << frames << '\n';
    };
  });

  // bank build
  auto* bank = app.add_subcommand("bank", "Long-term memory banks");
  bank->require_subcommand(1);
  auto* build = bank->add_subcommand("build", "Build one bank file per camera");
  std::string build_trace, build_out, build_strategy = "top_k:1";
  std::uint64_t build_seed = 7;
  std::size_t build_capacity = kDefaultBankCapacity;
  build->add_option("--trace", build_trace, "Trace file")->required();
  build->add_option("--strategy", build_strategy, "Curation: top_k:K, stride:S[:B], positive_only[:T], positive_oracle, all")
      ->check(StrategyValidator{});
  build->add_option("--extractor-seed", build_seed, "Surrogate extractor seed");
  build->add_option("--capacity", build_capacity, "Maximum entries per bank")->check(CLI::PositiveNumber);
  build->add_option("--out-dir", build_out, "Output directory")->required();
  build->callback([&] {
    action = [&] {
      const auto trace = read_trace(build_trace);
      const auto strategy = CurationStrategy::parse(build_strategy);
      const SurrogateExtractor extractor(trace.config, build_seed);
      fs::create_directories(build_out);
      std::size_t total = 0;
      for (const auto& cam : trace.cameras) {
        auto b = extractor.build_bank(cam, strategy, build_capacity);
        b.set_extractor_seed(build_seed);
        write_bank(b, fs::path(build_out) / bank_file_name(cam.camera_id));
        out << "camera " << cam.camera_id << " entries " << b.size() << '\n';
        total += b.size();
      }
      out << "total " << total << '\n';
    };
  });

  // train
  auto* train_cmd = app.add_subcommand("train", "Train a detector head on the training cameras");
  std::string tr_trace, tr_banks, tr_config, tr_out, tr_mode = "st+lt", tr_horizon = "1month";
  std::uint64_t tr_seed = 0;
  std::optional<std::uint32_t> tr_steps;
  std::optional<double> tr_lr;
  train_cmd->add_option("--trace", tr_trace, "Trace file")->required();
  train_cmd->add_option("--banks", tr_banks, "Directory of bank files")->required();
  train_cmd->add_option("--config", tr_config, "Config file; its [train] section is used");
  train_cmd->add_option("--mode", tr_mode, "Context mode")->check(CLI::IsMember({"single", "sf", "st", "lt", "st+lt"}));
  train_cmd->add_option("--horizon", tr_horizon, "Long-term window half-width")->check(HorizonValidator(false));
  train_cmd->add_option("--seed", tr_seed, "Training seed")->required();
  train_cmd->add_option("--steps", tr_steps, "Override train.steps");
  train_cmd->add_option("--lr", tr_lr, "Override train.learning_rate");
  train_cmd->add_option("--out", tr_out, "Output model file")->required();
  train_cmd->callback([&] {
    action = [&] {
      auto cfg = load_config(tr_config).train;
      cfg.seed = tr_seed;
      cfg.horizon = parse_duration(tr_horizon);
      if (tr_steps) cfg.steps = *tr_steps;
      if (tr_lr) cfg.learning_rate = *tr_lr;
      const auto trace = read_trace(tr_trace);
      const auto banks = read_banks(tr_banks);
      const auto seed = banks_extractor_seed(banks, 7);
      const auto cams = load_cameras(trace, seed, banks, "train");
      std::vector<double> curve;
      const auto model = train_model(cams, *parse_context_mode(tr_mode), trace.config.n_classes, trace.config.d_feat,
                                     seed, cfg, &curve);
      write_model(model, tr_out);
      out << "steps " << curve.size() << " loss " << curve.front() << " -> " << curve.back() << '\n';
    };
  });

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a model (mAP@0.5, AR@1)");
  Inputs ev_in;
  std::string ev_mode = "st+lt", ev_horizon = "model", ev_out, ev_dets;
  bool ev_json = false;
  add_inputs(eval, ev_in);
  eval->add_option("--mode", ev_mode, "Method")->check(CLI::IsMember(kModes));
  eval->add_option("--horizon", ev_horizon, "Long-term window, or `model` for the training horizon")
      ->check(HorizonValidator(true));
  eval->add_option("--out", ev_out, "Report file (stdout if empty)");
  eval->add_option("--detections", ev_dets, "Also write detections as text");
  eval->add_flag("--json", ev_json, "Write the report as JSON");
  eval->callback([&] {
    action = [&] {
      const auto l = load_inputs(ev_in);
      const auto method = *parse_method(ev_mode);
      const DetectOptions opt{method, horizon_or(ev_horizon, l.model.horizon), kShortTermRadius};
      const auto n = static_cast<int>(l.model.n_classes);
      const auto dets = foreground(detect_all(l.model, l.cameras, opt), n);
      auto report = evaluate(dets, ground_truth_of(l.cameras), n);
      std::ostringstream echo;
      echo << "method = " << ev_mode << "\nhorizon = " << format_duration(opt.horizon) << "\nsplit = " << ev_in.split
           << '\n';
      report.config_echo = echo.str();
      write_text(ev_out, ev_json ? report_json(report, ev_mode, opt.horizon) : format_report(report), out);
      if (!ev_dets.empty()) {
        std::ostringstream os;
        write_detections(os, dets);
        write_text(ev_dets, os.str(), out);
      }
    };
  });

  // report attend / report fp
  auto* report = app.add_subcommand("report", "Figure data as CSV");
  report->require_subcommand(1);
  auto* attend = report->add_subcommand("attend", "Histogram of attended time offsets (hours)");
  Inputs at_in;
  std::string at_horizon = "model", at_out, at_max_lag = "1w";
  std::size_t at_bins = 336;
  double at_threshold = 0.01;
  add_inputs(attend, at_in);
  attend->add_option("--horizon", at_horizon, "Long-term window, or `model`")->check(HorizonValidator(true));
  attend->add_option("--threshold", at_threshold, "Minimum attention weight")->check(CLI::Range(0.0, 1.0));
  attend->add_option("--max-lag", at_max_lag, "Histogram range is +-max-lag")->check(HorizonValidator(false));
  attend->add_option("--bins", at_bins, "Histogram bins")->check(CLI::PositiveNumber);
  attend->add_option("--out", at_out, "CSV file (stdout if empty)");
  attend->callback([&] {
    action = [&] {
      const auto l = load_inputs(at_in);
      const auto mode = l.model.mode;
      if (mode != ContextMode::lt && mode != ContextMode::st_lt)
        throw DataError("report attend needs a long-term (lt or st+lt) model");
      const DetectOptions opt{mode == ContextMode::lt ? Method::lt : Method::st_lt,
                              horizon_or(at_horizon, l.model.horizon), kShortTermRadius};
      std::vector<KeyframeAttention> att;
      for (const auto& cam : l.cameras) detect_camera(l.model, cam, opt, &att, at_threshold);
      std::vector<double> lags;
      for (const auto& k : att)
        for (auto o : k.offsets) lags.push_back(static_cast<double>(o) / 3600.0);
      const double range = static_cast<double>(parse_duration(at_max_lag)) / 3600.0;
      write_text(at_out, histogram_csv(make_histogram(lags, -range, range, at_bins), "lag_hours"), out);
    };
  });

  auto* fp = report->add_subcommand("fp", "False positives per confidence bin");
  Inputs fp_in;
  std::string fp_mode = "st+lt", fp_horizon = "model", fp_out;
  std::size_t fp_bins = 10;
  add_inputs(fp, fp_in);
  fp->add_option("--mode", fp_mode, "Method")->check(CLI::IsMember(kModes));
  fp->add_option("--horizon", fp_horizon, "Long-term window, or `model`")->check(HorizonValidator(true));
  fp->add_option("--bins", fp_bins, "Confidence bins over [0, 1]")->check(CLI::PositiveNumber);
  fp->add_option("--out", fp_out, "CSV file (stdout if empty)");
  fp->callback([&] {
    action = [&] {
      const auto l = load_inputs(fp_in);
      const DetectOptions opt{*parse_method(fp_mode), horizon_or(fp_horizon, l.model.horizon), kShortTermRadius};
      const auto n = static_cast<int>(l.model.n_classes);
      const auto dets = foreground(detect_all(l.model, l.cameras, opt), n);
      write_text(fp_out, fp_histogram_csv(fp_histogram(dets, ground_truth_of(l.cameras), n, fp_bins)), out);
    };
  });

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }

  try {
    if (action) action();
    return 0;
  } catch (const CLI::Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << '\n';
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
  }
  return 2;
}

}  // namespace camctx::cli
