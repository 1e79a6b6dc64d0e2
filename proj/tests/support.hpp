#pragma once

// Shared fixtures and independent reference computations for the tests.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <unistd.h>
#include <utility>
#include <vector>

#include "sonolab/core.hpp"
#include "sonolab/tensor.hpp"

namespace testing {

namespace fs = std::filesystem;

class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("sonolab-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

/// Sets SONOLAB_THREADS for the lifetime of the guard.
class ThreadCap {
 public:
  explicit ThreadCap(int n) {
    if (const char* old = std::getenv("SONOLAB_THREADS")) previous_ = old;
    ::setenv("SONOLAB_THREADS", std::to_string(n).c_str(), 1);
  }
  ~ThreadCap() {
    if (previous_.empty()) {
      ::unsetenv("SONOLAB_THREADS");
    } else {
      ::setenv("SONOLAB_THREADS", previous_.c_str(), 1);
    }
  }

 private:
  std::string previous_;
};

// Plane-wave round trip written out from the geometry, without library code.
inline double geometric_plane_wave_delay(double theta, double px, double pz, double ex, double ez,
                                         double c) {
  const double forward = pz * std::cos(theta) + px * std::sin(theta);
  const double back = std::sqrt((px - ex) * (px - ex) + (pz - ez) * (pz - ez));
  return (forward + back) / c;
}

/// |X[k]| of a real sequence by direct summation.
inline std::vector<double> dft_magnitude(const std::vector<double>& x) {
  const std::size_t n = x.size();
  std::vector<double> mag(n / 2 + 1);
  for (std::size_t k = 0; k < mag.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double phase = -2.0 * std::numbers::pi * static_cast<double>(k * i % n) / static_cast<double>(n);
      acc += x[i] * std::polar(1.0, phase);
    }
    mag[k] = std::abs(acc);
  }
  return mag;
}

/// Linear array and plane-wave scan in the acceptance configuration:
/// 64 elements, 0.3 mm pitch, 5/20 MHz, -10/0/+10 degrees, 400 x 256 grid
/// over x in [-20, 20] mm and z in [0, 60] mm.
inline std::pair<sonolab::Probe, sonolab::Scan> reference_setup() {
  sonolab::Probe probe = sonolab::Probe::linear(64, 0.3e-3, "linear64");
  sonolab::Scan scan;
  scan.sound_speed = 1540.0;
  scan.center_frequency = 5e6;
  scan.sampling_frequency = 20e6;
  scan.demodulation_frequency = 5e6;
  const double deg = std::numbers::pi / 180.0;
  scan.steering_angles = {-10.0 * deg, 0.0, 10.0 * deg};
  scan.initial_times = {0.0, 0.0, 0.0};
  scan.xlims = {-20e-3, 20e-3};
  scan.zlims = {0.0, 60e-3};
  scan.grid_shape = {400, 256};
  return {probe, scan};
}

/// Smaller variant for fast unit tests.
inline std::pair<sonolab::Probe, sonolab::Scan> small_setup(std::size_t n_z = 60, std::size_t n_x = 40) {
  auto [probe, scan] = reference_setup();
  probe = sonolab::Probe::linear(32, 0.3e-3, "linear32");
  scan.xlims = {-6e-3, 6e-3};
  scan.zlims = {10e-3, 30e-3};
  scan.grid_shape = {n_z, n_x};
  return {probe, scan};
}

inline sonolab::RealTensor random_tensor(std::vector<sonolab::Axis> axes, std::vector<std::size_t> shape,
                                         std::uint64_t seed, double scale = 1.0) {
  sonolab::RealTensor t(std::move(axes), std::move(shape));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, scale);
  for (double& v : t.values()) v = d(rng);
  return t;
}

inline sonolab::ComplexTensor random_complex(std::vector<sonolab::Axis> axes, std::vector<std::size_t> shape,
                                             std::uint64_t seed) {
  sonolab::ComplexTensor t(std::move(axes), std::move(shape));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  for (auto& v : t.values()) v = {d(rng), d(rng)};
  return t;
}

/// Index of the largest value in a (z, x) plane of a (frame, z, x) tensor.
inline std::pair<std::size_t, std::size_t> argmax_zx(const sonolab::RealTensor& img, std::size_t frame = 0) {
  const std::size_t nz = img.extent(1), nx = img.extent(2);
  std::size_t best = 0;
  for (std::size_t i = 1; i < nz * nx; ++i) {
    if (img[frame * nz * nx + i] > img[frame * nz * nx + best]) best = i;
  }
  return {best / nx, best % nx};
}

/// Centroid (z, x) of the pixels at or above half the maximum of a (z, x)
/// image; robust to the plateau that nearest-neighbour resampling produces.
inline std::pair<double, double> half_max_centroid(const sonolab::RealTensor& img, const std::vector<double>& z,
                                                   const std::vector<double>& x) {
  double peak = img[0];
  for (double v : img.values()) peak = std::max(peak, v);
  double sz = 0.0, sx = 0.0, w = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double v = img[i * x.size() + j];
      if (v < 0.5 * peak) continue;
      sz += v * z[i];
      sx += v * x[j];
      w += v;
    }
  }
  return {sz / w, sx / w};
}

template <typename T>
double max_abs_diff(const sonolab::Tensor<T>& a, const sonolab::Tensor<T>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

template <typename T>
double max_abs(const sonolab::Tensor<T>& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i]));
  return m;
}

}  // namespace testing
