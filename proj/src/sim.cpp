#include "sonolab/sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sonolab/delays.hpp"
#include "sonolab/parallel.hpp"

namespace sonolab::sim {

double Pulse::sigma() const {
  const double fwhm_to_sigma = 2.0 * std::sqrt(2.0 * std::numbers::ln2);
  const double sigma_f = fractional_bandwidth * center_frequency / fwhm_to_sigma;
  return 1.0 / (2.0 * std::numbers::pi * sigma_f);
}

double pulse_waveform(const Pulse& pulse, double t) {
  const double s = pulse.sigma();
  return std::exp(-t * t / (2.0 * s * s)) *
         std::cos(2.0 * std::numbers::pi * pulse.center_frequency * t);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double initial_time(const Scan& scan, std::size_t k) {
  return scan.initial_times.empty() ? 0.0 : scan.initial_times[k];
}

std::size_t samples_covering(double latest_echo, const Scan& scan) {
  return static_cast<std::size_t>(std::ceil(latest_echo * scan.sampling_frequency)) + 1;
}

double latest_echo(const std::vector<Vec3>& points, const Probe& probe, const Scan& scan,
                   const Pulse& pulse) {
  const TransmitGeometry tx = TransmitGeometry::from_scan(scan);
  double latest = 0.0;
  for (const Vec3& p : points) {
    for (std::size_t k = 0; k < tx.n_tx(); ++k) {
      const double t_tx = transmit_delay(tx, k, p.x, p.z, scan.sound_speed) - initial_time(scan, k);
      for (const Vec3& e : probe.element_positions) {
        latest = std::max(latest, t_tx + distance(p, e) / scan.sound_speed);
      }
    }
  }
  return latest + pulse.support();
}

}  // namespace

std::size_t required_samples(const Phantom& phantom, const Probe& probe, const Scan& scan,
                             const Pulse& pulse) {
  std::vector<Vec3> points;
  for (const auto& s : phantom.scatterers) points.push_back(s.position);
  if (points.empty()) return 1;
  return samples_covering(latest_echo(points, probe, scan, pulse), scan);
}

std::size_t samples_for_grid(const Probe& probe, const Scan& scan, const Pulse& pulse) {
  const CartesianGrid grid = make_cartesian_grid(scan);
  std::vector<Vec3> edge;
  for (double x : grid.x) {
    edge.push_back({x, 0.0, grid.z.front()});
    edge.push_back({x, 0.0, grid.z.back()});
  }
  for (double z : grid.z) {
    edge.push_back({grid.x.front(), 0.0, z});
    edge.push_back({grid.x.back(), 0.0, z});
  }
  return samples_covering(latest_echo(edge, probe, scan, pulse), scan);
}

RealTensor simulate_rf(const Phantom& phantom, const Probe& probe, const Scan& scan,
                       const Pulse& pulse, std::size_t n_samples, std::size_t n_frames) {
  probe.validate();
  scan.validate();
  if (n_frames == 0) throw Error(ErrorKind::config, "n_frames must be >= 1");
  for (const auto& s : phantom.scatterers) {
    if (!std::isfinite(s.amplitude) || !std::isfinite(s.position.x) ||
        !std::isfinite(s.position.z)) {
      throw Error(ErrorKind::config, "phantom scatterers must be finite");
    }
  }
  const std::size_t needed = required_samples(phantom, probe, scan, pulse);
  if (n_samples < needed) {
    throw Error(ErrorKind::config, "record too short: n_samples = " + std::to_string(n_samples) +
                                       " but the phantom needs n_samples >= " +
                                       std::to_string(needed));
  }

  const TransmitGeometry tx = TransmitGeometry::from_scan(scan);
  const std::size_t n_tx = tx.n_tx();
  const std::size_t n_el = probe.n_elements();
  const double c = scan.sound_speed;
  const double fs = scan.sampling_frequency;
  const double support = pulse.support();

  RealTensor rf({Axis::frame, Axis::tx, Axis::el, Axis::sample}, {n_frames, n_tx, n_el, n_samples});
  const std::size_t n_channels = n_tx * n_el;

  parallel_for(
      n_channels,
      [&](std::size_t begin, std::size_t end) {
        std::vector<double> trace(n_samples);
        for (std::size_t ch = begin; ch < end; ++ch) {
          const std::size_t k = ch / n_el;
          const std::size_t e = ch % n_el;
          const Vec3& element = probe.element_positions[e];
          const double t0 = initial_time(scan, k);
          std::fill(trace.begin(), trace.end(), 0.0);
          for (const auto& s : phantom.scatterers) {
            const Vec3& p = s.position;
            const double tau = transmit_delay(tx, k, p.x, p.z, c) + receive_delay(element, p.x, p.z, c);
            const double spread = std::max(distance(p, element) / kSpreadingReference, 1.0);
            const double gain = s.amplitude / spread;
            const double lo = std::ceil((tau - support - t0) * fs);
            const double hi = std::floor((tau + support - t0) * fs);
            const auto n_lo = static_cast<std::size_t>(std::max(lo, 0.0));
            const auto n_hi = static_cast<std::size_t>(
                std::clamp(hi, -1.0, static_cast<double>(n_samples - 1)) + 1.0);
            for (std::size_t n = n_lo; n < n_hi; ++n) {
              const double t = t0 + static_cast<double>(n) / fs;
              trace[n] += gain * pulse_waveform(pulse, t - tau);
            }
          }
          for (std::size_t f = 0; f < n_frames; ++f) {
            double* dst = rf.values().data() + ((f * n_tx + k) * n_el + e) * n_samples;
            std::copy(trace.begin(), trace.end(), dst);
            if (phantom.noise_std > 0.0) {
              const std::uint64_t channel = (f * n_tx + k) * n_el + e;
              std::mt19937_64 rng(splitmix64(phantom.seed ^ splitmix64(channel)));
              std::normal_distribution<double> noise(0.0, phantom.noise_std);
              for (std::size_t n = 0; n < n_samples; ++n) dst[n] += noise(rng);
            }
          }
        }
      },
      4);
  return rf;
}

SimulationConfig default_simulation_config() {
  SimulationConfig cfg;
  cfg.probe = Probe::linear(64, 0.3e-3, "linear64");
  cfg.scan.sound_speed = 1540.0;
  cfg.scan.center_frequency = 5e6;
  cfg.scan.sampling_frequency = 20e6;
  cfg.scan.demodulation_frequency = 5e6;
  cfg.scan.transmit_type = TransmitType::plane_wave;
  const double deg = std::numbers::pi / 180.0;
  cfg.scan.steering_angles = {-10.0 * deg, 0.0, 10.0 * deg};
  cfg.scan.initial_times = {0.0, 0.0, 0.0};
  cfg.scan.xlims = {-20e-3, 20e-3};
  cfg.scan.zlims = {0.0, 60e-3};
  cfg.scan.grid_shape = {400, 256};
  cfg.pulse.center_frequency = cfg.scan.center_frequency;
  return cfg;
}

namespace {

using json = nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorKind::config, "phantom config: " + msg);
}

void check_fields(const json& node, const std::set<std::string>& allowed, const std::string& where) {
  if (!node.is_object()) config_error("'" + where + "' must be an object");
  for (const auto& [k, _] : node.items()) {
    if (!allowed.count(k)) config_error("unknown field '" + k + "' in " + where);
  }
}

std::pair<double, double> mm_pair(const json& v, const std::string& name) {
  if (!v.is_array() || v.size() != 2) config_error("'" + name + "' must be a 2-element array");
  return {v[0].get<double>() * 1e-3, v[1].get<double>() * 1e-3};
}

Vec3 mm_point(const json& v) {
  if (!v.is_array() || v.size() != 3) config_error("points must be [x, y, z] in mm");
  return {v[0].get<double>() * 1e-3, v[1].get<double>() * 1e-3, v[2].get<double>() * 1e-3};
}

}  // namespace

SimulationConfig parse_phantom_config(const std::string& text) {
  SimulationConfig cfg = default_simulation_config();
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(e.what());
  }
  try {
    check_fields(root, {"scatterers", "noise_std", "seed", "n_frames", "n_samples", "probe", "scan",
                        "pulse"},
                 "root");
    if (root.contains("scatterers")) {
      if (!root["scatterers"].is_array()) config_error("'scatterers' must be an array");
      for (const auto& s : root["scatterers"]) {
        check_fields(s, {"x_mm", "y_mm", "z_mm", "amplitude"}, "scatterer");
        cfg.phantom.scatterers.push_back(
            {{s.value("x_mm", 0.0) * 1e-3, s.value("y_mm", 0.0) * 1e-3, s.at("z_mm").get<double>() * 1e-3},
             s.value("amplitude", 1.0)});
      }
    }
    cfg.phantom.noise_std = root.value("noise_std", 0.0);
    cfg.phantom.seed = root.value("seed", std::uint64_t{0});
    cfg.n_frames = root.value("n_frames", std::size_t{1});
    cfg.n_samples = root.value("n_samples", std::size_t{0});
    if (cfg.phantom.noise_std < 0.0) config_error("noise_std must be >= 0");

    if (root.contains("probe")) {
      const auto& p = root["probe"];
      check_fields(p, {"n_elements", "pitch_mm", "name"}, "probe");
      cfg.probe = Probe::linear(p.value("n_elements", std::size_t{64}), p.value("pitch_mm", 0.3) * 1e-3,
                                p.value("name", std::string("linear")));
    }
    if (root.contains("scan")) {
      const auto& s = root["scan"];
      check_fields(s, {"sound_speed", "center_frequency", "sampling_frequency",
                       "demodulation_frequency", "transmit_type", "steering_angles_deg",
                       "virtual_sources_mm", "initial_times", "xlims_mm", "zlims_mm", "grid_shape"},
                   "scan");
      Scan& scan = cfg.scan;
      scan.sound_speed = s.value("sound_speed", scan.sound_speed);
      scan.center_frequency = s.value("center_frequency", scan.center_frequency);
      scan.sampling_frequency = s.value("sampling_frequency", scan.sampling_frequency);
      scan.demodulation_frequency = s.value("demodulation_frequency", scan.center_frequency);
      scan.transmit_type = transmit_type_from_string(s.value("transmit_type", std::string("plane_wave")));
      if (scan.transmit_type == TransmitType::plane_wave) {
        scan.virtual_sources.clear();
        if (s.contains("steering_angles_deg")) {
          scan.steering_angles.clear();
          for (const auto& a : s["steering_angles_deg"]) {
            scan.steering_angles.push_back(a.get<double>() * std::numbers::pi / 180.0);
          }
        }
      } else {
        scan.steering_angles.clear();
        scan.virtual_sources.clear();
        if (!s.contains("virtual_sources_mm")) config_error("focused/diverging scans need virtual_sources_mm");
        for (const auto& v : s["virtual_sources_mm"]) scan.virtual_sources.push_back(mm_point(v));
      }
      if (s.contains("initial_times")) {
        scan.initial_times = s["initial_times"].get<std::vector<double>>();
      } else {
        scan.initial_times.assign(scan.n_tx(), 0.0);
      }
      if (s.contains("xlims_mm")) scan.xlims = mm_pair(s["xlims_mm"], "xlims_mm");
      if (s.contains("zlims_mm")) scan.zlims = mm_pair(s["zlims_mm"], "zlims_mm");
      if (s.contains("grid_shape")) {
        const auto shape = s["grid_shape"].get<std::vector<std::size_t>>();
        if (shape.size() != 2) config_error("'grid_shape' must be [n_z, n_x]");
        scan.grid_shape = {shape[0], shape[1]};
      }
    }
    cfg.pulse.center_frequency = cfg.scan.center_frequency;
    if (root.contains("pulse")) {
      check_fields(root["pulse"], {"fractional_bandwidth"}, "pulse");
      cfg.pulse.fractional_bandwidth = root["pulse"].value("fractional_bandwidth", 0.6);
    }
    if (!(cfg.pulse.fractional_bandwidth > 0.0 && cfg.pulse.fractional_bandwidth <= 1.0)) {
      config_error("fractional_bandwidth must lie in (0, 1]");
    }
  } catch (const json::exception& e) {
    config_error(e.what());
  }
  try {
    cfg.probe.validate();
    cfg.scan.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::config, std::string("phantom config: ") + e.what());
  }
  return cfg;
}

SimulationConfig load_phantom_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open phantom config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_phantom_config(buffer.str());
}

}  // namespace sonolab::sim
