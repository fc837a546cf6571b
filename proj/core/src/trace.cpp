#include "camctx/trace.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "camctx/error.hpp"
#include "camctx/rng.hpp"

namespace camctx {

namespace {

constexpr std::int64_t kDay = 86400;

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError(std::string("trace config: ") + name + " must lie in [0, 1]");
}

}  // namespace

void TraceConfig::validate() const {
  if (n_classes < 1) throw ConfigError("trace config: n_classes must be >= 1");
  if (n_cameras < 1) throw ConfigError("trace config: n_cameras must be >= 1");
  if (test_cameras > n_cameras) throw ConfigError("trace config: test_cameras exceeds n_cameras");
  if (!(duration_days > 0.0)) throw ConfigError("trace config: duration_days must be positive");
  if (!(triggers_per_day > 0.0)) throw ConfigError("trace config: triggers_per_day must be positive");
  if (burst_min < 1 || burst_max > 10 || burst_min > burst_max)
    throw ConfigError("trace config: burst lengths must satisfy 1 <= burst_min <= burst_max <= 10");
  check_probability(empty_fraction, "empty_fraction");
  check_probability(stray_fraction, "stray_fraction");
  check_probability(herd_continue, "herd_continue");
  check_probability(distractor_presence, "distractor_presence");
  if (species_per_camera < 1 || species_per_camera > n_classes)
    throw ConfigError("trace config: species_per_camera must lie in [1, n_classes]");
  if (max_herd < 1) throw ConfigError("trace config: max_herd must be >= 1");
  if (!(image_width >= 64.0 && image_height >= 64.0)) throw ConfigError("trace config: image too small");
  if (d_feat < 1 || n_proposals < 1 || grid < 1) throw ConfigError("trace config: extractor sizes must be >= 1");
  if (instance_noise < 0 || feature_noise < 0 || visit_noise < 0 || background_noise < 0 || visit_jitter_hours < 0 ||
      object_speed < 0)
    throw ConfigError("trace config: noise levels and speeds must be non-negative");
  check_probability(distractor_likeness, "distractor_likeness");
  const Timestamp start{start_year, start_month, start_day, 0, 0, 0};
  if (!start.valid() || start_year < kCodeFirstYear || start_year > kCodeLastYear)
    throw ConfigError("trace config: start date outside the encodable range");
  if (Timestamp::from_epoch_seconds(end_time()).year > kCodeLastYear)
    throw ConfigError("trace config: trace runs past the encodable range");
}

std::vector<std::string_view> TraceConfig::known_keys() {
  return {"n_classes", "n_cameras", "test_cameras", "duration_days", "start_year", "start_month",
          "start_day", "triggers_per_day", "burst_min", "burst_max", "empty_fraction",
          "species_per_camera", "visit_jitter_hours", "stray_fraction", "herd_continue", "max_herd",
          "residents_per_species",
          "distractors_per_camera", "distractor_presence", "image_width", "image_height",
          "object_speed", "d_feat", "n_proposals", "grid", "instance_noise", "feature_noise", "visit_noise",
          "distractor_likeness", "background_noise", "seed"};
}

TraceConfig TraceConfig::from_config(const KeyValueConfig& cfg) {
  cfg.require_known(known_keys());
  TraceConfig c;
  auto u32 = [&](std::string_view k, std::uint32_t v) {
    const auto x = cfg.get_int(k, v);
    if (x < 0 || x > 0xffffffffLL) throw ConfigError("config key '" + std::string(k) + "' out of range");
    return static_cast<std::uint32_t>(x);
  };
  c.n_classes = u32("n_classes", c.n_classes);
  c.n_cameras = u32("n_cameras", c.n_cameras);
  c.test_cameras = u32("test_cameras", c.test_cameras);
  c.duration_days = cfg.get_real("duration_days", c.duration_days);
  c.start_year = static_cast<int>(cfg.get_int("start_year", c.start_year));
  c.start_month = static_cast<int>(cfg.get_int("start_month", c.start_month));
  c.start_day = static_cast<int>(cfg.get_int("start_day", c.start_day));
  c.triggers_per_day = cfg.get_real("triggers_per_day", c.triggers_per_day);
  c.burst_min = u32("burst_min", c.burst_min);
  c.burst_max = u32("burst_max", c.burst_max);
  c.empty_fraction = cfg.get_real("empty_fraction", c.empty_fraction);
  c.species_per_camera = u32("species_per_camera", c.species_per_camera);
  c.visit_jitter_hours = cfg.get_real("visit_jitter_hours", c.visit_jitter_hours);
  c.stray_fraction = cfg.get_real("stray_fraction", c.stray_fraction);
  c.herd_continue = cfg.get_real("herd_continue", c.herd_continue);
  c.max_herd = u32("max_herd", c.max_herd);
  c.residents_per_species = u32("residents_per_species", c.residents_per_species);
  c.distractors_per_camera = u32("distractors_per_camera", c.distractors_per_camera);
  c.distractor_presence = cfg.get_real("distractor_presence", c.distractor_presence);
  c.image_width = cfg.get_real("image_width", c.image_width);
  c.image_height = cfg.get_real("image_height", c.image_height);
  c.object_speed = cfg.get_real("object_speed", c.object_speed);
  c.d_feat = u32("d_feat", c.d_feat);
  c.n_proposals = u32("n_proposals", c.n_proposals);
  c.grid = u32("grid", c.grid);
  c.instance_noise = cfg.get_real("instance_noise", c.instance_noise);
  c.feature_noise = cfg.get_real("feature_noise", c.feature_noise);
  c.visit_noise = cfg.get_real("visit_noise", c.visit_noise);
  c.distractor_likeness = cfg.get_real("distractor_likeness", c.distractor_likeness);
  c.background_noise = cfg.get_real("background_noise", c.background_noise);
  c.seed = cfg.get_u64("seed", c.seed);
  c.validate();
  return c;
}

std::string TraceConfig::to_config_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "n_classes = " << n_classes << '\n'
     << "n_cameras = " << n_cameras << '\n'
     << "test_cameras = " << test_cameras << '\n'
     << "duration_days = " << duration_days << '\n'
     << "start_year = " << start_year << '\n'
     << "start_month = " << start_month << '\n'
     << "start_day = " << start_day << '\n'
     << "triggers_per_day = " << triggers_per_day << '\n'
     << "burst_min = " << burst_min << '\n'
     << "burst_max = " << burst_max << '\n'
     << "empty_fraction = " << empty_fraction << '\n'
     << "species_per_camera = " << species_per_camera << '\n'
     << "visit_jitter_hours = " << visit_jitter_hours << '\n'
     << "stray_fraction = " << stray_fraction << '\n'
     << "herd_continue = " << herd_continue << '\n'
     << "max_herd = " << max_herd << '\n'
     << "residents_per_species = " << residents_per_species << '\n'
     << "distractors_per_camera = " << distractors_per_camera << '\n'
     << "distractor_presence = " << distractor_presence << '\n'
     << "image_width = " << image_width << '\n'
     << "image_height = " << image_height << '\n'
     << "object_speed = " << object_speed << '\n'
     << "d_feat = " << d_feat << '\n'
     << "n_proposals = " << n_proposals << '\n'
     << "grid = " << grid << '\n'
     << "instance_noise = " << instance_noise << '\n'
     << "feature_noise = " << feature_noise << '\n'
     << "visit_noise = " << visit_noise << '\n'
     << "distractor_likeness = " << distractor_likeness << '\n'
     << "background_noise = " << background_noise << '\n'
     << "seed = " << seed << '\n';
  return os.str();
}

std::int64_t TraceConfig::start_time() const {
  return Timestamp{start_year, start_month, start_day, 0, 0, 0}.to_epoch_seconds();
}

std::int64_t TraceConfig::end_time() const {
  return start_time() + static_cast<std::int64_t>(std::llround(duration_days * kDay));
}

bool Frame::has_object() const noexcept {
  return std::any_of(instances.begin(), instances.end(), [](const Instance& i) { return !i.distractor; });
}

namespace {

struct Trigger {
  std::int64_t time = 0;
  int species = -1;  // -1: false trigger
};

struct Mover {
  Instance inst;
  double vx = 0.0, vy = 0.0;
};

BoxPx clamp_box(BoxPx b) {
  b.width = std::min(b.width, b.image_width - 2.0);
  b.height = std::min(b.height, b.image_height - 2.0);
  b.x_center = std::clamp(b.x_center, 0.5 * b.width + 1.0, b.image_width - 0.5 * b.width - 1.0);
  b.y_center = std::clamp(b.y_center, 0.5 * b.height + 1.0, b.image_height - 0.5 * b.height - 1.0);
  return b;
}

// Class-dependent typical box size, shared by every camera.
std::pair<double, double> class_size(const TraceConfig& cfg, int cls) {
  Rng rng(derive_seed(cfg.seed, {0x5123, static_cast<std::uint64_t>(cls)}));
  const double w = rng.uniform(0.08, 0.22) * cfg.image_width;
  const double aspect = rng.uniform(0.6, 1.2);
  return {w, w * aspect};
}

CameraTrace generate_camera(const TraceConfig& cfg, std::uint32_t camera) {
  Rng rng(derive_seed(cfg.seed, {0xca3e7a, camera}));
  CameraTrace cam;
  cam.camera_id = camera;
  cam.held_out = camera >= cfg.n_cameras - cfg.test_cameras;

  std::vector<int> classes(cfg.n_classes);
  for (std::uint32_t i = 0; i < cfg.n_classes; ++i) classes[i] = static_cast<int>(i);
  for (std::size_t i = classes.size(); i > 1; --i) std::swap(classes[i - 1], classes[rng.below(i)]);
  cam.resident_species.assign(classes.begin(), classes.begin() + cfg.species_per_camera);
  std::vector<std::pair<double, double>> trails;
  for (std::size_t s = 0; s < cam.resident_species.size(); ++s) {
    cam.visit_hours.push_back(rng.uniform(0.0, 24.0));
    trails.emplace_back(rng.uniform(0.2, 0.8) * cfg.image_width, rng.uniform(0.3, 0.8) * cfg.image_height);
  }

  std::vector<BoxPx> distractor_boxes;
  for (std::uint32_t d = 0; d < cfg.distractors_per_camera; ++d) {
    cam.distractor_lookalike.push_back(cam.resident_species[rng.below(cam.resident_species.size())]);
    BoxPx b;
    b.image_width = cfg.image_width;
    b.image_height = cfg.image_height;
    b.width = rng.uniform(0.1, 0.2) * cfg.image_width;
    b.height = rng.uniform(0.1, 0.2) * cfg.image_height;
    b.x_center = rng.uniform(0.15, 0.85) * cfg.image_width;
    b.y_center = rng.uniform(0.2, 0.85) * cfg.image_height;
    distractor_boxes.push_back(clamp_box(b));
  }

  // Triggers: false ones at uniform times, animal ones on per-species daily schedules.
  const std::int64_t t0 = cfg.start_time();
  const std::int64_t t_end = cfg.end_time();
  const auto n_days = static_cast<std::int64_t>(std::ceil(cfg.duration_days));
  std::vector<Trigger> triggers;
  for (std::int64_t day = 0; day < n_days; ++day) {
    const auto count = rng.poisson(cfg.triggers_per_day);
    for (std::uint64_t k = 0; k < count; ++k) {
      Trigger tr;
      double hour = rng.uniform(0.0, 24.0);
      if (!rng.bernoulli(cfg.empty_fraction)) {
        if (rng.bernoulli(cfg.stray_fraction)) {
          tr.species = static_cast<int>(rng.below(cfg.n_classes));
        } else {
          const auto s = rng.below(cam.resident_species.size());
          tr.species = cam.resident_species[s];
          hour = cam.visit_hours[s] + rng.normal(0.0, cfg.visit_jitter_hours);
        }
      }
      tr.time = t0 + day * kDay + static_cast<std::int64_t>(std::floor(hour * 3600.0));
      if (tr.time >= t0 && tr.time < t_end) triggers.push_back(tr);
    }
  }
  std::stable_sort(triggers.begin(), triggers.end(),
                   [](const Trigger& a, const Trigger& b) { return a.time < b.time; });

  // Resident individuals of species slot s are s * residents_per_species + j;
  // strays and herd members beyond the population get fresh ids.
  std::uint32_t next_individual = cfg.species_per_camera * cfg.residents_per_species;
  std::int64_t next_free = t0;
  std::uint32_t burst_id = 0;
  for (const auto& tr : triggers) {
    const std::int64_t start = std::max(tr.time, next_free);
    const auto length = static_cast<std::uint32_t>(cfg.burst_min + rng.below(cfg.burst_max - cfg.burst_min + 1));
    if (start + length > t_end) break;

    std::vector<Mover> herd;
    if (tr.species >= 0) {
      std::uint32_t size = 1;
      while (size < cfg.max_herd && rng.bernoulli(cfg.herd_continue)) ++size;
      const auto it = std::find(cam.resident_species.begin(), cam.resident_species.end(), tr.species);
      const auto [tx, ty] = it != cam.resident_species.end()
                                ? trails[static_cast<std::size_t>(it - cam.resident_species.begin())]
                                : std::pair{rng.uniform(0.2, 0.8) * cfg.image_width,
                                            rng.uniform(0.3, 0.8) * cfg.image_height};
      const auto [cw, ch] = class_size(cfg, tr.species);
      std::vector<std::uint32_t> population;
      if (it != cam.resident_species.end()) {
        const auto slot = static_cast<std::uint32_t>(it - cam.resident_species.begin());
        for (std::uint32_t j = 0; j < cfg.residents_per_species; ++j)
          population.push_back(slot * cfg.residents_per_species + j);
      }
      for (std::uint32_t k = 0; k < size; ++k) {
        Mover m;
        m.inst.class_id = tr.species;
        if (!population.empty()) {
          const auto pick = rng.below(population.size());
          m.inst.individual = population[pick];
          population.erase(population.begin() + static_cast<std::ptrdiff_t>(pick));
        } else {
          m.inst.individual = next_individual++;
        }
        m.inst.box.image_width = cfg.image_width;
        m.inst.box.image_height = cfg.image_height;
        const double scale = rng.uniform(0.8, 1.2);
        m.inst.box.width = cw * scale;
        m.inst.box.height = ch * scale;
        m.inst.box.x_center = tx + rng.normal(0.0, 0.08 * cfg.image_width);
        m.inst.box.y_center = ty + rng.normal(0.0, 0.06 * cfg.image_height);
        m.inst.box = clamp_box(m.inst.box);
        const double angle = rng.uniform(0.0, 2.0 * 3.141592653589793);
        const double speed = cfg.object_speed * rng.uniform(0.5, 1.5);
        m.vx = speed * std::cos(angle);
        m.vy = 0.4 * speed * std::sin(angle);
        herd.push_back(m);
      }
    }

    for (std::uint32_t p = 0; p < length; ++p) {
      Frame f;
      f.frame_index = cam.frames.size();
      f.frame_id = make_frame_id(camera, f.frame_index);
      f.time = start + p;
      f.burst = burst_id;
      f.burst_position = p;
      f.burst_length = length;
      for (auto& m : herd) {
        if (p > 0) {
          BoxPx moved = m.inst.box;
          moved.x_center += m.vx;
          moved.y_center += m.vy;
          const BoxPx clamped = clamp_box(moved);
          if (clamped.x_center != moved.x_center) m.vx = -m.vx;
          if (clamped.y_center != moved.y_center) m.vy = -m.vy;
          m.inst.box = clamped;
        }
        f.instances.push_back(m.inst);
      }
      for (std::size_t d = 0; d < distractor_boxes.size(); ++d) {
        if (!rng.bernoulli(cfg.distractor_presence)) continue;
        Instance inst;
        inst.distractor = true;
        inst.class_id = -1;
        inst.individual = static_cast<std::uint32_t>(d);
        inst.box = distractor_boxes[d];
        f.instances.push_back(inst);
      }
      cam.frames.push_back(std::move(f));
    }
    next_free = start + length;
    ++burst_id;
  }
  return cam;
}

}  // namespace

std::vector<CameraTrace> generate_trace(const TraceConfig& cfg) {
  cfg.validate();
  std::vector<CameraTrace> out;
  out.reserve(cfg.n_cameras);
  std::size_t frames = 0;
  for (std::uint32_t c = 0; c < cfg.n_cameras; ++c) {
    out.push_back(generate_camera(cfg, c));
    frames += out.back().frames.size();
  }
  if (frames == 0) throw ConfigError("trace config produced no frames");
  return out;
}

double empty_frame_fraction(std::span<const CameraTrace> traces) {
  std::size_t total = 0, empty = 0;
  for (const auto& cam : traces)
    for (const auto& f : cam.frames) {
      ++total;
      if (!f.has_object()) ++empty;
    }
  return total == 0 ? 0.0 : static_cast<double>(empty) / static_cast<double>(total);
}

}  // namespace camctx
