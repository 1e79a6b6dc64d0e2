#include "sonolab/agent.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "sonolab/parallel.hpp"

namespace sonolab::agent {

namespace {

void check_particles(const RealTensor& particles) {
  const std::vector<Axis> expected{Axis::batch, Axis::particle, Axis::z, Axis::x};
  if (particles.axes() != expected) {
    throw Error(ErrorKind::schema, "particles must have axes (batch, particle, z, x), got (" +
                                       axes_to_string(particles.axes()) + ")");
  }
  if (particles.extent(1) < 2) throw Error(ErrorKind::parameter, "need at least two particles");
}

}  // namespace

RealTensor pixel_entropy(const RealTensor& particles, double eps) {
  check_particles(particles);
  if (!(eps > 0.0)) throw Error(ErrorKind::parameter, "eps must be > 0");
  const std::size_t n_batch = particles.extent(0);
  const std::size_t n_part = particles.extent(1);
  const std::size_t n_pix = particles.extent(2) * particles.extent(3);
  RealTensor out({Axis::batch, Axis::z, Axis::x},
                 {n_batch, particles.extent(2), particles.extent(3)});
  const double* src = particles.values().data();
  double* dst = out.values().data();
  const double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;

  parallel_for(n_batch * n_pix, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::size_t b = i / n_pix;
      const std::size_t px = i % n_pix;
      const double* base = src + b * n_part * n_pix + px;
      double mean = 0.0;
      for (std::size_t p = 0; p < n_part; ++p) mean += base[p * n_pix];
      mean /= static_cast<double>(n_part);
      double ss = 0.0;
      for (std::size_t p = 0; p < n_part; ++p) {
        const double d = base[p * n_pix] - mean;
        ss += d * d;
      }
      const double var = ss / static_cast<double>(n_part - 1);
      dst[i] = 0.5 * std::log(two_pi_e * (var + eps));
    }
  });
  return out;
}

std::vector<double> line_scores(const RealTensor& entropy, std::size_t batch,
                                std::size_t n_possible_actions) {
  const std::size_t height = entropy.extent(1);
  const std::size_t width = entropy.extent(2);
  if (n_possible_actions == 0 || width % n_possible_actions != 0) {
    throw Error(ErrorKind::parameter, "width " + std::to_string(width) +
                                          " is not divisible into " +
                                          std::to_string(n_possible_actions) + " lines");
  }
  const std::size_t line_width = width / n_possible_actions;
  std::vector<double> scores(n_possible_actions, 0.0);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) scores[c / line_width] += entropy(batch, r, c);
  }
  return scores;
}

std::vector<ActionSet> gem_select(const RealTensor& particles, std::size_t n_actions,
                                  std::size_t n_possible_actions, double eps) {
  check_particles(particles);
  if (n_actions == 0) throw Error(ErrorKind::parameter, "n_actions must be >= 1");
  if (n_actions > n_possible_actions) {
    throw Error(ErrorKind::parameter, "n_actions (" + std::to_string(n_actions) +
                                          ") exceeds n_possible_actions (" +
                                          std::to_string(n_possible_actions) + ")");
  }
  const RealTensor entropy = pixel_entropy(particles, eps);
  std::vector<ActionSet> out;
  for (std::size_t b = 0; b < entropy.extent(0); ++b) {
    const std::vector<double> scores = line_scores(entropy, b, n_possible_actions);
    std::vector<std::size_t> order(n_possible_actions);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t c) { return scores[a] > scores[c]; });
    ActionSet set;
    set.selected_lines.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_actions));
    std::sort(set.selected_lines.begin(), set.selected_lines.end());
    set.n_actions = n_actions;
    set.n_possible_actions = n_possible_actions;
    set.line_width = entropy.extent(2) / n_possible_actions;
    out.push_back(std::move(set));
  }
  return out;
}

std::size_t default_n_actions(std::size_t width) { return std::max<std::size_t>(1, width / 8); }

std::size_t LineMask::count() const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), std::uint8_t{1}));
}

LineMask make_line_mask(const ActionSet& actions, std::size_t height, std::size_t width) {
  if (actions.selected_lines.empty()) throw Error(ErrorKind::parameter, "empty line selection");
  LineMask mask{height, width, std::vector<std::uint8_t>(height * width, 0)};
  for (std::size_t line : actions.selected_lines) {
    const std::size_t first = line * actions.line_width;
    if (first + actions.line_width > width) {
      throw Error(ErrorKind::bounds, "line " + std::to_string(line) + " exceeds width " +
                                         std::to_string(width));
    }
    for (std::size_t r = 0; r < height; ++r) {
      std::fill_n(mask.cells.begin() + static_cast<std::ptrdiff_t>(r * width + first),
                  actions.line_width, std::uint8_t{1});
    }
  }
  return mask;
}

RealTensor apply_mask(const RealTensor& data, const LineMask& mask, double fill) {
  const std::size_t r = data.rank();
  if (r < 2 || data.extent(r - 2) != mask.height || data.extent(r - 1) != mask.width) {
    throw Error(ErrorKind::schema, "mask (" + std::to_string(mask.height) + ", " +
                                       std::to_string(mask.width) +
                                       ") does not broadcast against " +
                                       shape_to_string(data.shape()));
  }
  RealTensor out = data;
  const std::size_t plane = mask.height * mask.width;
  auto values = out.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!mask.cells[i % plane]) values[i] = fill;
  }
  return out;
}

RealTensor toy_particles(const RealTensor& reference, std::size_t n_particles,
                         const std::vector<double>& noise_profile, std::uint64_t seed) {
  if (reference.rank() != 2 && reference.rank() != 3) {
    throw Error(ErrorKind::schema, "reference must be (z, x) or (batch, z, x)");
  }
  if (n_particles < 2) throw Error(ErrorKind::parameter, "need at least two particles");
  const std::size_t r = reference.rank();
  const std::size_t batch = r == 3 ? reference.extent(0) : 1;
  const std::size_t height = reference.extent(r - 2);
  const std::size_t width = reference.extent(r - 1);
  if (noise_profile.size() != width) {
    throw Error(ErrorKind::parameter, "noise profile has " + std::to_string(noise_profile.size()) +
                                          " entries but the image is " + std::to_string(width) +
                                          " wide");
  }
  RealTensor out({Axis::batch, Axis::particle, Axis::z, Axis::x}, {batch, n_particles, height, width});
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t plane = height * width;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* ref = reference.values().data() + b * plane;
    for (std::size_t p = 0; p < n_particles; ++p) {
      double* dst = out.values().data() + (b * n_particles + p) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const double scale = noise_profile[i % width];
        const double draw = normal(rng);
        dst[i] = ref[i] + scale * draw;
      }
    }
  }
  return out;
}

}  // namespace sonolab::agent
