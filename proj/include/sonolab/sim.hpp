#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sonolab/core.hpp"
#include "sonolab/tensor.hpp"

namespace sonolab::sim {

struct Scatterer {
  Vec3 position;  // meters
  double amplitude = 1.0;
};

struct Phantom {
  std::vector<Scatterer> scatterers;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
};

/// Gaussian-windowed cosine. The envelope spectrum's half-amplitude width is
/// fractional_bandwidth * center_frequency.
struct Pulse {
  double center_frequency = 5e6;
  double fractional_bandwidth = 0.6;

  double sigma() const;
  /// Half-width of the time support used for record-length checks (4 sigma).
  double support() const { return 4.0 * sigma(); }
};

double pulse_waveform(const Pulse& pulse, double t);

/// Reference distance for 1/r spreading (clamped below).
inline constexpr double kSpreadingReference = 1e-3;

/// Smallest record (samples) covering every echo of the phantom.
std::size_t required_samples(const Phantom& phantom, const Probe& probe, const Scan& scan,
                             const Pulse& pulse);

/// Smallest record covering echoes from anywhere on the scan's imaging grid.
std::size_t samples_for_grid(const Probe& probe, const Scan& scan, const Pulse& pulse);

/// Point-scatterer RF (frame, tx, el, sample). Uses the same delay functions as
/// tof_correct. Noise is seeded per (frame, tx, el) channel, so the result is
/// independent of the worker count. Throws ErrorKind::config when n_samples is
/// too short, naming the required count.
RealTensor simulate_rf(const Phantom& phantom, const Probe& probe, const Scan& scan,
                       const Pulse& pulse, std::size_t n_samples, std::size_t n_frames = 1);

/// Everything needed to synthesize a container file.
struct SimulationConfig {
  Phantom phantom;
  Probe probe;
  Scan scan;
  Pulse pulse;
  std::size_t n_samples = 0;  // 0 -> samples_for_grid
  std::size_t n_frames = 1;
};

/// Defaults: 64-element 0.3 mm linear array, 5 MHz / 20 MHz, c = 1540 m/s,
/// plane waves at -10, 0, +10 degrees, x in [-20, 20] mm, z in [0, 60] mm,
/// 400 x 256 grid.
SimulationConfig default_simulation_config();

/// Parses the phantom config (JSON, see docs/phantom.md). Throws ErrorKind::config.
SimulationConfig parse_phantom_config(const std::string& text);
SimulationConfig load_phantom_config(const std::string& path);

}  // namespace sonolab::sim
