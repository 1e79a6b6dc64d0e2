#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "sonolab/tensor.hpp"

namespace sonolab::agent {

inline constexpr double kEntropyEps = 1e-8;

/// Gaussian entropy proxy per pixel, H = 0.5 ln(2 pi e (var + eps)) with the
/// unbiased particle variance. particles: (batch, particle, z, x) -> (batch, z, x).
RealTensor pixel_entropy(const RealTensor& particles, double eps = kEntropyEps);

struct ActionSet {
  std::vector<std::size_t> selected_lines;  // strictly increasing
  std::size_t n_actions = 0;
  std::size_t n_possible_actions = 0;
  std::size_t line_width = 1;  // image columns per line
};

/// Sum of pixel entropy over each candidate line, for one batch element of
/// an entropy map (batch, z, x).
std::vector<double> line_scores(const RealTensor& entropy, std::size_t batch,
                                std::size_t n_possible_actions);

/// Greedy entropy selection. Line scores are additive, so this is a top-k
/// with ties going to the lower index. One ActionSet per batch element.
std::vector<ActionSet> gem_select(const RealTensor& particles, std::size_t n_actions,
                                  std::size_t n_possible_actions, double eps = kEntropyEps);

/// `n_actions = width // 8`, at least one.
std::size_t default_n_actions(std::size_t width);

struct LineMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> cells;  // row-major

  bool operator()(std::size_t row, std::size_t col) const { return cells[row * width + col] != 0; }
  std::size_t count() const;
};

/// True on every column covered by a selected line.
LineMask make_line_mask(const ActionSet& actions, std::size_t height, std::size_t width);

/// where(mask, data, fill) over the last two axes, broadcast over the rest.
RealTensor apply_mask(const RealTensor& data, const LineMask& mask, double fill);

/// reference (z, x) or (batch, z, x) plus column-scaled Gaussian noise.
/// Returns (batch, particle, z, x).
RealTensor toy_particles(const RealTensor& reference, std::size_t n_particles,
                         const std::vector<double>& noise_profile, std::uint64_t seed);

}  // namespace sonolab::agent
