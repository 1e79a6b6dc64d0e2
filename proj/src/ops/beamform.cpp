#include <cmath>
#include <numbers>

#include "sonolab/ops.hpp"
#include "sonolab/parallel.hpp"

namespace sonolab::ops {

PixelSet flatten_grid(const CartesianGrid& grid) {
  PixelSet pixels;
  pixels.x.reserve(grid.n_pixels());
  pixels.z.reserve(grid.n_pixels());
  for (double z : grid.z) {
    for (double x : grid.x) {
      pixels.x.push_back(x);
      pixels.z.push_back(z);
    }
  }
  return pixels;
}

ComplexTensor tof_correct(const ComplexTensor& iq, const PixelSet& pixels, const TofParams& params) {
  if (iq.rank() != 4) throw Error(ErrorKind::schema, "tof_correct expects (frame, tx, el, sample) IQ");
  const std::size_t n_frames = iq.extent(0);
  const std::size_t n_tx = iq.extent(1);
  const std::size_t n_el = iq.extent(2);
  const std::size_t n_samples = iq.extent(3);
  const std::size_t n_pix = pixels.size();
  if (n_pix == 0) throw Error(ErrorKind::parameter, "tof_correct needs at least one pixel");
  if (params.element_positions.size() != n_el) {
    throw Error(ErrorKind::schema, "element count does not match the el axis");
  }
  if (params.transmit.n_tx() != n_tx) {
    throw Error(ErrorKind::schema, "transmit count does not match the tx axis");
  }
  if (!params.initial_times.empty() && params.initial_times.size() != n_tx) {
    throw Error(ErrorKind::parameter, "initial_times length must equal n_tx");
  }
  if (!(params.sound_speed > 0.0)) throw Error(ErrorKind::parameter, "sound_speed must be > 0");

  ComplexTensor out({Axis::frame, Axis::tx, Axis::el, Axis::pixel}, {n_frames, n_tx, n_el, n_pix});
  const double c = params.sound_speed;
  const double fs = params.sampling_frequency;
  const double omega = 2.0 * std::numbers::pi * params.demodulation_frequency;
  const double last = static_cast<double>(n_samples - 1);
  const Complex* in = iq.values().data();
  Complex* dst = out.values().data();

  parallel_for(n_pix, [&](std::size_t begin, std::size_t end) {
    std::vector<double> tau_tx(n_tx);
    std::vector<double> tau_rx(n_el);
    for (std::size_t p = begin; p < end; ++p) {
      const double x = pixels.x[p];
      const double z = pixels.z[p];
      for (std::size_t k = 0; k < n_tx; ++k) tau_tx[k] = transmit_delay(params.transmit, k, x, z, c);
      for (std::size_t e = 0; e < n_el; ++e) {
        tau_rx[e] = receive_delay(params.element_positions[e], x, z, c);
      }
      for (std::size_t k = 0; k < n_tx; ++k) {
        const double t0 = params.initial_times.empty() ? 0.0 : params.initial_times[k];
        for (std::size_t e = 0; e < n_el; ++e) {
          const double tau = tau_tx[k] + tau_rx[e];
          const double s = (tau - t0) * fs;
          const Complex rot = std::polar(1.0, omega * tau);
          for (std::size_t f = 0; f < n_frames; ++f) {
            Complex value{0.0, 0.0};
            if (s >= 0.0 && s <= last) {
              const Complex* row = in + ((f * n_tx + k) * n_el + e) * n_samples;
              const std::size_t i0 = static_cast<std::size_t>(s);
              const double frac = s - static_cast<double>(i0);
              value = i0 + 1 < n_samples ? row[i0] * (1.0 - frac) + row[i0 + 1] * frac : row[i0];
              value *= rot;
            }
            dst[((f * n_tx + k) * n_el + e) * n_pix + p] = value;
          }
        }
      }
    }
  });
  return out;
}

double receive_apodization(double lateral_distance, double depth, double f_number) {
  const double half_width = depth / (2.0 * f_number);
  const double d = std::abs(lateral_distance);
  if (d > half_width) return 0.0;
  const double flat = 0.8 * half_width;
  if (d <= flat) return 1.0;
  const double t = (d - flat) / (half_width - flat);
  return 0.5 * (1.0 + std::cos(std::numbers::pi * t));
}

double transmit_weight(const TransmitGeometry& tx, std::size_t k, double x, double z,
                       double aperture_min_x, double aperture_max_x) {
  const auto [lo, hi] = insonified_span(tx, k, z, aperture_min_x, aperture_max_x);
  const double outside = x < lo ? lo - x : (x > hi ? x - hi : 0.0);
  if (outside <= 0.0) return 1.0;
  const double rolloff = 0.1 * (aperture_max_x - aperture_min_x);
  if (outside >= rolloff) return 0.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * outside / rolloff));
}

ComplexTensor pfield_weight(ComplexTensor aligned, const PixelSet& pixels,
                            const std::vector<Vec3>& element_positions,
                            const TransmitGeometry& tx, double f_number) {
  if (!(f_number > 0.0)) throw Error(ErrorKind::parameter, "f_number must be > 0");
  if (aligned.rank() != 4) {
    throw Error(ErrorKind::schema, "pfield_weight expects (frame, tx, el, pixel) input");
  }
  const std::size_t n_frames = aligned.extent(0);
  const std::size_t n_tx = aligned.extent(1);
  const std::size_t n_el = aligned.extent(2);
  const std::size_t n_pix = aligned.extent(3);
  if (pixels.size() != n_pix) throw Error(ErrorKind::schema, "pixel count does not match input");
  if (element_positions.size() != n_el) {
    throw Error(ErrorKind::schema, "element count does not match the el axis");
  }
  if (tx.n_tx() != n_tx) throw Error(ErrorKind::schema, "transmit count does not match the tx axis");

  double ap_min = element_positions.front().x;
  double ap_max = element_positions.front().x;
  for (const Vec3& e : element_positions) {
    ap_min = std::min(ap_min, e.x);
    ap_max = std::max(ap_max, e.x);
  }
  Complex* data = aligned.values().data();

  parallel_for(n_pix, [&](std::size_t begin, std::size_t end) {
    std::vector<double> w_tx(n_tx);
    std::vector<double> w_rx(n_el);
    for (std::size_t p = begin; p < end; ++p) {
      const double x = pixels.x[p];
      const double z = pixels.z[p];
      for (std::size_t k = 0; k < n_tx; ++k) w_tx[k] = transmit_weight(tx, k, x, z, ap_min, ap_max);
      for (std::size_t e = 0; e < n_el; ++e) {
        w_rx[e] = receive_apodization(element_positions[e].x - x, z, f_number);
      }
      for (std::size_t f = 0; f < n_frames; ++f) {
        for (std::size_t k = 0; k < n_tx; ++k) {
          for (std::size_t e = 0; e < n_el; ++e) {
            data[((f * n_tx + k) * n_el + e) * n_pix + p] *= w_tx[k] * w_rx[e];
          }
        }
      }
    }
  });
  return aligned;
}

ComplexTensor delay_and_sum(const ComplexTensor& aligned) {
  if (aligned.rank() != 4) {
    throw Error(ErrorKind::schema, "delay_and_sum expects (frame, tx, el, pixel) input");
  }
  const std::size_t n_frames = aligned.extent(0);
  const std::size_t n_tx = aligned.extent(1);
  const std::size_t n_el = aligned.extent(2);
  const std::size_t n_pix = aligned.extent(3);
  ComplexTensor out({Axis::frame, Axis::pixel}, {n_frames, n_pix});
  const Complex* in = aligned.values().data();
  Complex* dst = out.values().data();
  parallel_for(n_pix, [&](std::size_t begin, std::size_t end) {
    for (std::size_t f = 0; f < n_frames; ++f) {
      for (std::size_t p = begin; p < end; ++p) {
        Complex acc{0.0, 0.0};
        for (std::size_t k = 0; k < n_tx; ++k) {
          for (std::size_t e = 0; e < n_el; ++e) acc += in[((f * n_tx + k) * n_el + e) * n_pix + p];
        }
        dst[f * n_pix + p] = acc;
      }
    }
  });
  return out;
}

}  // namespace sonolab::ops
