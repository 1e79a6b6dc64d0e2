#pragma once

// Signal-processing and beamforming kernels. Every function here is pure:
// the result depends only on the arguments.

#include <array>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "sonolab/core.hpp"
#include "sonolab/delays.hpp"
#include "sonolab/tensor.hpp"

namespace sonolab::ops {

using Range = std::pair<double, double>;

/// Hamming-windowed sinc low-pass with unit DC gain.
std::vector<double> lowpass_taps(double cutoff_hz, double sampling_frequency,
                                 std::size_t n_taps = 63);

/// IQ demodulation of real RF (frame, tx, el, sample).
///
/// Mixes with exp(-i 2 pi fd t_n), t_n = initial_times[tx] + n / fs, low-passes
/// with a 63-tap filter at fd / 2 (group delay removed) and keeps every
/// `decimation`-th sample. Throws ErrorKind::parameter when fd >= fs / 2.
ComplexTensor demodulate(const RealTensor& rf, double demodulation_frequency,
                         double sampling_frequency, std::size_t decimation = 1,
                         std::span<const double> initial_times = {});

/// Flattened pixel coordinates, row-major over (z, x).
struct PixelSet {
  std::vector<double> x;
  std::vector<double> z;

  std::size_t size() const noexcept { return x.size(); }
};

PixelSet flatten_grid(const CartesianGrid& grid);

struct TofParams {
  std::vector<Vec3> element_positions;
  TransmitGeometry transmit;
  double sound_speed = 1540.0;
  double sampling_frequency = 20e6;  // of the IQ input, after decimation
  double demodulation_frequency = 5e6;
  std::vector<double> initial_times;
};

/// Aligns IQ samples (frame, tx, el, sample) to pixels: (frame, tx, el, pixel).
/// Linear fast-time interpolation, carrier phase restored with exp(+i 2 pi fd tau);
/// samples outside the record contribute 0.
ComplexTensor tof_correct(const ComplexTensor& iq, const PixelSet& pixels, const TofParams& params);

/// Receive apodization: 1 within 80% of the half-aperture depth / (2 F#),
/// raised-cosine taper to 0 at the half-aperture edge, 0 outside.
double receive_apodization(double lateral_distance, double depth, double f_number);

/// Transmit field estimate: 1 inside the insonified span, raised-cosine
/// roll-off over 10% of the aperture width outside it, then 0.
double transmit_weight(const TransmitGeometry& tx, std::size_t k, double x, double z,
                       double aperture_min_x, double aperture_max_x);

/// Multiplies aligned samples by transmit and receive weights.
/// Throws ErrorKind::parameter when f_number <= 0.
ComplexTensor pfield_weight(ComplexTensor aligned, const PixelSet& pixels,
                            const std::vector<Vec3>& element_positions,
                            const TransmitGeometry& tx, double f_number);

/// Sums over tx (outer) then el (inner): (frame, tx, el, pixel) -> (frame, pixel).
ComplexTensor delay_and_sum(const ComplexTensor& aligned);

RealTensor envelope(const ComplexTensor& x);

/// Divides each frame (axis 0) by its maximum. Throws
/// ErrorKind::degenerate_input for an all-zero frame.
RealTensor normalize(RealTensor x);

/// 20 log10(max(x, 10^(floor_db / 20))).
RealTensor log_compress(RealTensor x, double floor_db);

double clip_map_value(double v, Range clip, Range out_range);
RealTensor clip_map_range(RealTensor x, Range clip, Range out_range);

struct ScanConvertParams {
  Range rho_range{0.0, 1.0};
  Range theta_range{-0.78, 0.78};
  int order = 1;                             // 0 nearest, 1 bilinear, 2 bicubic (Catmull-Rom)
  std::array<std::size_t, 2> out_shape{0, 0};  // (n_z, n_x); zeros -> polar shape
  double fill = 0.0;
};

/// Cartesian grid spanning the bounding box of the sector.
CartesianGrid scan_convert_grid(const ScanConvertParams& params, std::array<std::size_t, 2> out_shape);

/// Resamples the last two axes (rho, theta) onto a Cartesian (z, x) grid.
RealTensor scan_convert(const RealTensor& polar, const ScanConvertParams& params);

}  // namespace sonolab::ops
