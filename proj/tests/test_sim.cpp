#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "sonolab/sim.hpp"
#include "support.hpp"

using namespace sonolab;
using namespace sonolab::sim;

namespace {

std::pair<Probe, Scan> single_element() {
  auto [probe, scan] = testing::reference_setup();
  probe = Probe::linear(1, 0.3e-3, "single");
  scan.steering_angles = {0.0};
  scan.initial_times = {0.0};
  return {probe, scan};
}

std::vector<double> channel(const RealTensor& rf, std::size_t f, std::size_t k, std::size_t e) {
  const std::size_t n = rf.extent(3);
  const double* p = rf.values().data() + ((f * rf.extent(1) + k) * rf.extent(2) + e) * n;
  return {p, p + n};
}

}  // namespace

TEST_CASE("pulse waveform shape") {
  const Pulse pulse;
  CHECK(pulse_waveform(pulse, 0.0) == 1.0);
  for (double t : {1e-8, 5e-8, 1.3e-7, 4e-7}) {
    CHECK(pulse_waveform(pulse, t) == doctest::Approx(pulse_waveform(pulse, -t)).epsilon(1e-14));
  }
  CHECK(std::abs(pulse_waveform(pulse, pulse.support())) < 1e-3);
}

TEST_CASE("pulse spectrum peaks at the centre frequency with the configured bandwidth") {
  const Pulse pulse;
  const double fs = 400e6;
  const std::size_t n = 8000;  // 0.05 MHz bins
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = (static_cast<double>(i) - static_cast<double>(n / 2)) / fs;
    x[i] = pulse_waveform(pulse, t);
  }
  const auto mag = testing::dft_magnitude(x);
  const double df = fs / static_cast<double>(n);
  const auto peak = static_cast<std::size_t>(std::max_element(mag.begin(), mag.end()) - mag.begin());
  CHECK(std::abs(static_cast<double>(peak) * df - 5e6) <= df);

  const double half = mag[peak] / 2.0;
  std::size_t lo = peak, hi = peak;
  while (lo > 0 && mag[lo] > half) --lo;
  while (hi + 1 < mag.size() && mag[hi] > half) ++hi;
  const double width = static_cast<double>(hi - lo) * df;
  CHECK(std::abs(width - 0.6 * 5e6) / (0.6 * 5e6) < 0.05);
}

TEST_CASE("single scatterer echo arrives at the round-trip time") {
  auto [probe, scan] = single_element();
  Phantom phantom;
  phantom.scatterers = {{{0.0, 0.0, 0.02}, 1.0}};
  const Pulse pulse;
  const RealTensor rf = simulate_rf(phantom, probe, scan, pulse, 700);
  const auto trace = channel(rf, 0, 0, 0);
  const auto peak = static_cast<double>(std::max_element(trace.begin(), trace.end(),
                                                         [](double a, double b) { return std::abs(a) < std::abs(b); }) -
                                        trace.begin());
  const double expected = 2.0 * 0.02 / 1540.0 * 20e6;
  CHECK(expected == doctest::Approx(519.48).epsilon(1e-4));
  CHECK(std::abs(peak - expected) <= 1.0);
  // Compact support: far from the echo the trace is exactly zero.
  CHECK(trace[100] == 0.0);
  CHECK(trace[650] == 0.0);
}

TEST_CASE("zero amplitude and empty phantoms give silence") {
  auto [probe, scan] = testing::small_setup();
  const Pulse pulse;
  Phantom zero;
  zero.scatterers = {{{0.0, 0.0, 0.02}, 0.0}};
  const std::size_t n = samples_for_grid(probe, scan, pulse);
  const RealTensor rf = simulate_rf(zero, probe, scan, pulse, n, 2);
  CHECK(testing::max_abs(rf) == 0.0);
  CHECK(rf.shape() == std::vector<std::size_t>{2, 3, 32, n});
  CHECK(testing::max_abs(simulate_rf(Phantom{}, probe, scan, pulse, n)) == 0.0);
}

TEST_CASE("echoes superpose linearly") {
  auto [probe, scan] = testing::small_setup();
  const Pulse pulse;
  const std::size_t n = samples_for_grid(probe, scan, pulse);
  const std::vector<Scatterer> all = {{{-3e-3, 0.0, 0.015}, 1.0}, {{1e-3, 0.0, 0.022}, 0.7}, {{4e-3, 0.0, 0.028}, 2.0}};
  Phantom joint;
  joint.scatterers = all;
  const RealTensor together = simulate_rf(joint, probe, scan, pulse, n);
  RealTensor sum({Axis::frame, Axis::tx, Axis::el, Axis::sample}, together.shape());
  for (const auto& s : all) {
    Phantom one;
    one.scatterers = {s};
    const RealTensor part = simulate_rf(one, probe, scan, pulse, n);
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += part[i];
  }
  CHECK(testing::max_abs_diff(together, sum) <= 1e-12 * testing::max_abs(together));

  Phantom doubled;
  doubled.scatterers = {{all[0].position, 2.0}};
  Phantom single;
  single.scatterers = {all[0]};
  const RealTensor a = simulate_rf(doubled, probe, scan, pulse, n);
  const RealTensor b = simulate_rf(single, probe, scan, pulse, n);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == 2.0 * b[i]);
}

TEST_CASE("noise is seeded and independent of the worker count") {
  auto [probe, scan] = testing::small_setup();
  const Pulse pulse;
  Phantom phantom;
  phantom.scatterers = {{{0.0, 0.0, 0.02}, 1.0}};
  phantom.noise_std = 0.05;
  phantom.seed = 99;
  const std::size_t n = samples_for_grid(probe, scan, pulse);
  RealTensor one, many;
  {
    testing::ThreadCap cap(1);
    one = simulate_rf(phantom, probe, scan, pulse, n, 2);
  }
  {
    testing::ThreadCap cap(8);
    many = simulate_rf(phantom, probe, scan, pulse, n, 2);
  }
  CHECK(one == many);

  phantom.seed = 100;
  CHECK(!(simulate_rf(phantom, probe, scan, pulse, n, 2) == one));

  // Frames carry independent noise realisations around the same echoes.
  const auto f0 = channel(one, 0, 1, 5);
  const auto f1 = channel(one, 1, 1, 5);
  CHECK(f0 != f1);

  // Noise statistics on a silent phantom.
  Phantom silent;
  silent.noise_std = 0.5;
  silent.seed = 3;
  const RealTensor noise = simulate_rf(silent, probe, scan, pulse, n);
  double mean = 0.0, sq = 0.0;
  for (double v : noise.values()) {
    mean += v;
    sq += v * v;
  }
  mean /= static_cast<double>(noise.size());
  const double std = std::sqrt(sq / static_cast<double>(noise.size()) - mean * mean);
  CHECK(std::abs(mean) < 0.01);
  CHECK(std == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("a record that is too short names the needed sample count") {
  auto [probe, scan] = single_element();
  Phantom phantom;
  phantom.scatterers = {{{0.0, 0.0, 0.02}, 1.0}};
  const Pulse pulse;
  const std::size_t needed = required_samples(phantom, probe, scan, pulse);
  const double expected = std::ceil((2.0 * 0.02 / 1540.0 + pulse.support()) * 20e6) + 1.0;
  CHECK(static_cast<double>(needed) == expected);
  try {
    simulate_rf(phantom, probe, scan, pulse, needed - 1);
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    CHECK(std::string(e.what()).find(std::to_string(needed)) != std::string::npos);
  }
  CHECK_NOTHROW(simulate_rf(phantom, probe, scan, pulse, needed));

  Phantom bad;
  bad.scatterers = {{{std::nan(""), 0.0, 0.02}, 1.0}};
  CHECK_THROWS_AS(simulate_rf(bad, probe, scan, pulse, 1000), Error);
}

TEST_CASE("the grid record covers every scatterer inside the grid") {
  auto [probe, scan] = testing::reference_setup();
  const Pulse pulse;
  const std::size_t n = samples_for_grid(probe, scan, pulse);
  Phantom phantom;
  for (double x : {-20e-3, 0.0, 20e-3}) {
    for (double z : {0.0, 30e-3, 60e-3}) phantom.scatterers.push_back({{x, 0.0, z}, 1.0});
  }
  CHECK(required_samples(phantom, probe, scan, pulse) <= n);
}

TEST_CASE("phantom config parsing") {
  const SimulationConfig cfg = parse_phantom_config(R"({
    "scatterers": [{"x_mm": -2, "z_mm": 25, "amplitude": 0.5}, {"z_mm": 40}],
    "noise_std": 0.01, "seed": 12, "n_frames": 3,
    "probe": {"n_elements": 48, "pitch_mm": 0.2},
    "scan": {"sound_speed": 1500, "steering_angles_deg": [0], "xlims_mm": [-5, 5], "zlims_mm": [10, 50],
             "grid_shape": [100, 50]},
    "pulse": {"fractional_bandwidth": 0.8}
  })");
  REQUIRE(cfg.phantom.scatterers.size() == 2);
  CHECK(cfg.phantom.scatterers[0].position.x == doctest::Approx(-2e-3));
  CHECK(cfg.phantom.scatterers[0].position.z == doctest::Approx(25e-3));
  CHECK(cfg.phantom.scatterers[0].amplitude == 0.5);
  CHECK(cfg.phantom.scatterers[1].amplitude == 1.0);
  CHECK(cfg.phantom.noise_std == 0.01);
  CHECK(cfg.phantom.seed == 12);
  CHECK(cfg.n_frames == 3);
  CHECK(cfg.probe.n_elements() == 48);
  CHECK(cfg.probe.pitch == doctest::Approx(0.2e-3));
  CHECK(cfg.scan.sound_speed == 1500.0);
  CHECK(cfg.scan.steering_angles == std::vector<double>{0.0});
  CHECK(cfg.scan.initial_times == std::vector<double>{0.0});
  CHECK(cfg.scan.grid_shape == std::array<std::size_t, 2>{100, 50});
  CHECK(cfg.pulse.fractional_bandwidth == 0.8);

  const SimulationConfig defaults = parse_phantom_config("{}");
  CHECK(defaults.probe.n_elements() == 64);
  CHECK(defaults.scan.steering_angles.size() == 3);
  CHECK(defaults.scan.grid_shape == std::array<std::size_t, 2>{400, 256});

  const SimulationConfig diverging = parse_phantom_config(
      R"({"scan": {"transmit_type": "diverging", "virtual_sources_mm": [[0, 0, -10], [5, 0, -10]]}})");
  CHECK(diverging.scan.transmit_type == TransmitType::diverging);
  CHECK(diverging.scan.virtual_sources.size() == 2);
  CHECK(diverging.scan.steering_angles.empty());

  for (const char* bad : {R"({"scatterers": [{"x_mm": 1}]})", R"({"colour": 1})",
                          R"({"scan": {"xlim": [0, 1]}})", R"({"pulse": {"fractional_bandwidth": 0}})",
                          R"({"scatterers": 3})", "not json", R"({"noise_std": -1})"}) {
    CAPTURE(bad);
    try {
      parse_phantom_config(bad);
      FAIL("expected an exception");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::config);
    }
  }
  CHECK_THROWS_AS(load_phantom_config("/nonexistent/phantom.json"), Error);
}
