#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "sonolab/core.hpp"

namespace sonolab {

/// Transmit description shared by the beamformer and the simulator.
struct TransmitGeometry {
  TransmitType type = TransmitType::plane_wave;
  std::vector<double> steering_angles;
  std::vector<Vec3> virtual_sources;

  static TransmitGeometry from_scan(const Scan& scan);
  /// Reads transmit_type plus steering_angles or virtual_sources (flattened n_tx x 3).
  static TransmitGeometry from_parameters(const ParameterBag& bag);

  std::size_t n_tx() const noexcept;
};

/// One-way transmit time (s) from the transmit event to pixel (x, z).
///
/// Plane wave: (z cos(theta) + x sin(theta)) / c.
/// Diverging: (|p - v| - |z_v|) / c, zero when the wavefront crosses z = 0 on the source axis.
/// Focused: (z_v + sign(z - z_v) |p - v|) / c.
double transmit_delay(const TransmitGeometry& tx, std::size_t k, double x, double z,
                      double sound_speed);

/// Receive time (s) from pixel (x, z) back to an element.
double receive_delay(const Vec3& element, double x, double z, double sound_speed);

/// Lateral extent [lo, hi] at depth z of the region bounded by the rays that
/// leave the aperture edges for transmit k.
std::pair<double, double> insonified_span(const TransmitGeometry& tx, std::size_t k, double z,
                                          double aperture_min_x, double aperture_max_x);

std::vector<double> flatten(const std::vector<Vec3>& points);
std::vector<Vec3> unflatten(const std::vector<double>& flat);

}  // namespace sonolab
