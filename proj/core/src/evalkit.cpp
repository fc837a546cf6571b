#include "camctx/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "camctx/error.hpp"

namespace camctx {

double iou(const BoxPx& a, const BoxPx& b) noexcept {
  const double ix = std::max(0.0, std::min(a.x_max(), b.x_max()) - std::max(a.x_min(), b.x_min()));
  const double iy = std::max(0.0, std::min(a.y_max(), b.y_max()) - std::max(a.y_min(), b.y_min()));
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return inter / uni;
}

namespace {

void check_classes(std::span<const Detection> dets, std::span<const GroundTruthBox> gts, int n_classes) {
  for (const auto& d : dets)
    if (d.class_id < 0 || d.class_id >= n_classes)
      throw InputError("evaluate: detection class " + std::to_string(d.class_id) + " outside configured set");
  for (const auto& g : gts)
    if (g.class_id < 0 || g.class_id >= n_classes)
      throw InputError("evaluate: ground-truth class " + std::to_string(g.class_id) + " outside configured set");
}

// Indices of `dets` ranked for matching.
std::vector<std::size_t> ranking(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = dets[a];
    const auto& y = dets[b];
    if (x.score != y.score) return x.score > y.score;
    if (x.frame_id != y.frame_id) return x.frame_id < y.frame_id;
    if (x.box_index != y.box_index) return x.box_index < y.box_index;
    return a < b;
  });
  return order;
}

struct ClassResult {
  double ap = 0.0;
  std::size_t n_gt = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
};

// Outcomes in `dets` order; ClassResult per class.
std::vector<ClassResult> run_matching(std::span<const Detection> dets, std::span<const GroundTruthBox> gts,
                                      int n_classes, double thr, std::vector<MatchOutcome>* outcomes) {
  check_classes(dets, gts, n_classes);
  std::vector<ClassResult> results(static_cast<std::size_t>(n_classes));
  for (const auto& g : gts)
    if (!g.ignore) ++results[static_cast<std::size_t>(g.class_id)].n_gt;

  // ground truth grouped by (class, frame)
  std::vector<std::size_t> gt_order(gts.size());
  std::iota(gt_order.begin(), gt_order.end(), std::size_t{0});
  std::stable_sort(gt_order.begin(), gt_order.end(), [&](std::size_t a, std::size_t b) {
    if (gts[a].class_id != gts[b].class_id) return gts[a].class_id < gts[b].class_id;
    return gts[a].frame_id < gts[b].frame_id;
  });
  auto gt_range = [&](int cls, std::uint64_t frame) {
    const auto lo = std::lower_bound(gt_order.begin(), gt_order.end(), std::pair{cls, frame},
                                     [&](std::size_t i, const std::pair<int, std::uint64_t>& key) {
                                       return std::pair{gts[i].class_id, gts[i].frame_id} < key;
                                     });
    auto hi = lo;
    while (hi != gt_order.end() && gts[*hi].class_id == cls && gts[*hi].frame_id == frame) ++hi;
    return std::pair{lo, hi};
  };

  std::vector<char> taken(gts.size(), 0);
  std::vector<MatchOutcome> outcome(dets.size(), MatchOutcome::false_positive);
  std::vector<std::vector<char>> tp_flags(static_cast<std::size_t>(n_classes));

  for (std::size_t idx : ranking(dets)) {
    const auto& d = dets[idx];
    const auto [lo, hi] = gt_range(d.class_id, d.frame_id);
    double best = -1.0;
    std::size_t best_gt = gts.size();
    for (auto it = lo; it != hi; ++it) {
      const std::size_t g = *it;
      if (taken[g] && !gts[g].ignore) continue;
      const double o = iou(d.box, gts[g].box);
      if (o >= thr && (o > best || (o == best && g < best_gt))) {
        best = o;
        best_gt = g;
      }
    }
    auto& flags = tp_flags[static_cast<std::size_t>(d.class_id)];
    if (best_gt == gts.size()) {
      outcome[idx] = MatchOutcome::false_positive;
      flags.push_back(0);
    } else if (gts[best_gt].ignore) {
      outcome[idx] = MatchOutcome::ignored;
    } else {
      taken[best_gt] = 1;
      outcome[idx] = MatchOutcome::true_positive;
      flags.push_back(1);
    }
  }

  for (std::size_t c = 0; c < results.size(); ++c) {
    auto& r = results[c];
    const auto& flags = tp_flags[c];
    std::vector<double> precision(flags.size());
    std::size_t tp = 0;
    for (std::size_t k = 0; k < flags.size(); ++k) {
      tp += static_cast<std::size_t>(flags[k]);
      precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    }
    r.tp = tp;
    r.fp = flags.size() - tp;
    // precision envelope from the right
    for (std::size_t k = precision.size(); k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);
    double sum = 0.0;
    for (std::size_t k = 0; k < flags.size(); ++k)
      if (flags[k]) sum += precision[k];
    r.ap = r.n_gt == 0 ? 0.0 : sum / static_cast<double>(r.n_gt);
  }
  if (outcomes) *outcomes = std::move(outcome);
  return results;
}

double mean_over_classes_with_gt(const std::vector<ClassResult>& results, auto value) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& r : results)
    if (r.n_gt > 0) {
      sum += value(r);
      ++count;
    }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

std::vector<Detection> top_per_frame(std::span<const Detection> dets) {
  std::vector<Detection> out;
  const auto order = ranking(dets);
  std::vector<std::uint64_t> seen;
  for (std::size_t idx : order) {
    const auto f = dets[idx].frame_id;
    if (std::find(seen.begin(), seen.end(), f) != seen.end()) continue;
    seen.push_back(f);
    out.push_back(dets[idx]);
  }
  return out;
}

}  // namespace

std::vector<MatchOutcome> match_detections(std::span<const Detection> dets,
                                           std::span<const GroundTruthBox> gts, int n_classes,
                                           double iou_threshold) {
  std::vector<MatchOutcome> out;
  run_matching(dets, gts, n_classes, iou_threshold, &out);
  return out;
}

EvalReport evaluate(std::span<const Detection> dets, std::span<const GroundTruthBox> gts, int n_classes,
                    double iou_threshold) {
  if (n_classes < 1) throw InputError("evaluate: need at least one class");
  const auto results = run_matching(dets, gts, n_classes, iou_threshold, nullptr);
  EvalReport rep;
  rep.iou_threshold = iou_threshold;
  rep.map = mean_over_classes_with_gt(results, [](const ClassResult& r) { return r.ap; });
  rep.recall_all = mean_over_classes_with_gt(
      results, [](const ClassResult& r) { return static_cast<double>(r.tp) / static_cast<double>(r.n_gt); });
  for (const auto& r : results) {
    rep.class_ap.push_back(r.n_gt > 0 ? r.ap : std::numeric_limits<double>::quiet_NaN());
    rep.class_ground_truth.push_back(r.n_gt);
    rep.class_detections.push_back(r.tp + r.fp);
    rep.true_positives += r.tp;
    rep.false_positives += r.fp;
  }
  const auto top = top_per_frame(dets);
  const auto top_results = run_matching(top, gts, n_classes, iou_threshold, nullptr);
  rep.ar_at_1 = mean_over_classes_with_gt(
      top_results, [](const ClassResult& r) { return static_cast<double>(r.tp) / static_cast<double>(r.n_gt); });
  return rep;
}

double map_over_iou_range(std::span<const Detection> dets, std::span<const GroundTruthBox> gts, int n_classes) {
  double sum = 0.0;
  for (int i = 0; i < 10; ++i) sum += evaluate(dets, gts, n_classes, 0.5 + 0.05 * i).map;
  return sum / 10.0;
}

std::vector<std::size_t> fp_histogram(std::span<const Detection> dets, std::span<const GroundTruthBox> gts,
                                      int n_classes, std::size_t bins, double iou_threshold) {
  if (bins == 0) throw ParameterError("fp_histogram: need at least one bin");
  const auto outcome = match_detections(dets, gts, n_classes, iou_threshold);
  std::vector<std::size_t> counts(bins, 0);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (outcome[i] != MatchOutcome::false_positive) continue;
    const double s = std::clamp(dets[i].score, 0.0, 1.0);
    const auto b = std::min(bins - 1, static_cast<std::size_t>(s * static_cast<double>(bins)));
    ++counts[b];
  }
  return counts;
}

Histogram make_histogram(std::span<const double> values, double lo, double hi, std::size_t bins) {
  if (bins == 0 || !(hi > lo)) throw ParameterError("make_histogram: bad range");
  Histogram h;
  h.lo = lo;
  h.width = (hi - lo) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double v : values) {
    if (v < lo || v > hi) continue;
    const auto b = std::min(bins - 1, static_cast<std::size_t>((v - lo) / h.width));
    ++h.counts[b];
  }
  return h;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(6);
  os << "map@" << r.iou_threshold << " = " << r.map << '\n'
     << "ar@1 = " << r.ar_at_1 << '\n'
     << "recall_all = " << r.recall_all << '\n'
     << "true_positives = " << r.true_positives << '\n'
     << "false_positives = " << r.false_positives << '\n';
  for (std::size_t c = 0; c < r.class_ap.size(); ++c) {
    os << "class " << c << " ap = ";
    if (std::isnan(r.class_ap[c])) os << "n/a";
    else os << r.class_ap[c];
    os << " gt = " << r.class_ground_truth[c] << " dets = " << r.class_detections[c] << '\n';
  }
  if (!r.config_echo.empty()) {
    os << "# config\n";
    std::istringstream in(r.config_echo);
    for (std::string line; std::getline(in, line);) os << "# " << line << '\n';
  }
  return os.str();
}

std::string histogram_csv(const Histogram& h, const std::string& value_name) {
  std::ostringstream os;
  os.precision(10);
  os << value_name << "_lo," << value_name << "_hi,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    os << h.lo + h.width * static_cast<double>(b) << ',' << h.lo + h.width * static_cast<double>(b + 1) << ','
       << h.counts[b] << '\n';
  return os.str();
}

std::string fp_histogram_csv(std::span<const std::size_t> counts) {
  std::ostringstream os;
  os.precision(10);
  os << "score_lo,score_hi,false_positives\n";
  const double w = 1.0 / static_cast<double>(counts.size());
  for (std::size_t b = 0; b < counts.size(); ++b)
    os << w * static_cast<double>(b) << ',' << w * static_cast<double>(b + 1) << ',' << counts[b] << '\n';
  return os.str();
}

namespace {

template <typename Fn>
void for_each_record(std::istream& in, Fn fn) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    fn(fields, line_no);
  }
}

}  // namespace

std::vector<Detection> read_detections(std::istream& in) {
  std::vector<Detection> out;
  std::vector<std::uint32_t> per_frame_count;
  std::vector<std::uint64_t> frames;
  for_each_record(in, [&](std::istringstream& f, std::size_t line_no) {
    Detection d;
    if (!(f >> d.frame_id >> d.class_id >> d.score >> d.box.x_center >> d.box.y_center >> d.box.width >>
          d.box.height))
      throw InputError("detections line " + std::to_string(line_no) + ": expected 7 fields");
    const auto it = std::find(frames.begin(), frames.end(), d.frame_id);
    if (it == frames.end()) {
      frames.push_back(d.frame_id);
      per_frame_count.push_back(0);
      d.box_index = 0;
    } else {
      d.box_index = ++per_frame_count[static_cast<std::size_t>(it - frames.begin())];
    }
    out.push_back(d);
  });
  return out;
}

void write_detections(std::ostream& out, std::span<const Detection> dets) {
  const auto old = out.precision(17);
  for (const auto& d : dets)
    out << d.frame_id << ' ' << d.class_id << ' ' << d.score << ' ' << d.box.x_center << ' ' << d.box.y_center
        << ' ' << d.box.width << ' ' << d.box.height << '\n';
  out.precision(old);
}

std::vector<GroundTruthBox> read_ground_truth(std::istream& in) {
  std::vector<GroundTruthBox> out;
  for_each_record(in, [&](std::istringstream& f, std::size_t line_no) {
    GroundTruthBox g;
    if (!(f >> g.frame_id >> g.class_id >> g.box.x_center >> g.box.y_center >> g.box.width >> g.box.height))
      throw InputError("ground truth line " + std::to_string(line_no) + ": expected 6 fields");
    int ignore = 0;
    if (f >> ignore) g.ignore = ignore != 0;
    out.push_back(g);
  });
  return out;
}

void write_ground_truth(std::ostream& out, std::span<const GroundTruthBox> gts) {
  const auto old = out.precision(17);
  for (const auto& g : gts)
    out << g.frame_id << ' ' << g.class_id << ' ' << g.box.x_center << ' ' << g.box.y_center << ' '
        << g.box.width << ' ' << g.box.height << (g.ignore ? " 1" : "") << '\n';
  out.precision(old);
}

}  // namespace camctx
