#include <cmath>
#include <numbers>

#include "sonolab/ops.hpp"
#include "sonolab/parallel.hpp"

namespace sonolab::ops {

std::vector<double> lowpass_taps(double cutoff_hz, double sampling_frequency, std::size_t n_taps) {
  std::vector<double> taps(n_taps);
  const double fc = cutoff_hz / sampling_frequency;  // cycles per sample
  const double mid = 0.5 * static_cast<double>(n_taps - 1);
  double sum = 0.0;
  for (std::size_t j = 0; j < n_taps; ++j) {
    const double m = static_cast<double>(j) - mid;
    const double arg = 2.0 * std::numbers::pi * fc * m;
    const double sinc = m == 0.0 ? 2.0 * fc : std::sin(arg) / (std::numbers::pi * m);
    const double window =
        n_taps == 1 ? 1.0
                    : 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) /
                                             static_cast<double>(n_taps - 1));
    taps[j] = sinc * window;
    sum += taps[j];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

ComplexTensor demodulate(const RealTensor& rf, double demodulation_frequency,
                         double sampling_frequency, std::size_t decimation,
                         std::span<const double> initial_times) {
  if (!(sampling_frequency > 0.0)) {
    throw Error(ErrorKind::parameter, "sampling_frequency must be > 0");
  }
  if (!(demodulation_frequency > 0.0) || demodulation_frequency >= 0.5 * sampling_frequency) {
    throw Error(ErrorKind::parameter,
                "demodulation frequency must lie in (0, fs/2) to avoid aliasing");
  }
  if (decimation == 0) throw Error(ErrorKind::parameter, "decimation must be >= 1");
  if (rf.rank() != 4) {
    throw Error(ErrorKind::schema, "demodulate expects (frame, tx, el, sample) input");
  }
  const std::size_t n_frames = rf.extent(0);
  const std::size_t n_tx = rf.extent(1);
  const std::size_t n_el = rf.extent(2);
  const std::size_t n_in = rf.extent(3);
  const std::size_t n_out = n_in / decimation;
  if (n_out == 0) throw Error(ErrorKind::parameter, "decimation exceeds the record length");
  if (!initial_times.empty() && initial_times.size() != n_tx) {
    throw Error(ErrorKind::parameter, "initial_times length must equal n_tx");
  }

  const auto taps = lowpass_taps(0.5 * demodulation_frequency, sampling_frequency);
  const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(taps.size() / 2);
  const double omega = 2.0 * std::numbers::pi * demodulation_frequency;

  ComplexTensor out({Axis::frame, Axis::tx, Axis::el, Axis::sample},
                    {n_frames, n_tx, n_el, n_out});
  const std::size_t n_channels = n_frames * n_tx * n_el;

  parallel_for(
      n_channels,
      [&](std::size_t begin, std::size_t end) {
        std::vector<Complex> mixed(n_in);
        for (std::size_t ch = begin; ch < end; ++ch) {
          const std::size_t k = (ch / n_el) % n_tx;
          const double t0 = initial_times.empty() ? 0.0 : initial_times[k];
          const double* src = rf.values().data() + ch * n_in;
          for (std::size_t n = 0; n < n_in; ++n) {
            const double t = t0 + static_cast<double>(n) / sampling_frequency;
            mixed[n] = src[n] * std::polar(1.0, -omega * t);
          }
          Complex* dst = out.values().data() + ch * n_out;
          for (std::size_t m = 0; m < n_out; ++m) {
            const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(m * decimation);
            Complex acc{0.0, 0.0};
            for (std::size_t j = 0; j < taps.size(); ++j) {
              const std::ptrdiff_t idx = n + half - static_cast<std::ptrdiff_t>(j);
              if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(n_in)) continue;
              acc += taps[j] * mixed[static_cast<std::size_t>(idx)];
            }
            dst[m] = acc;
          }
        }
      },
      4);
  return out;
}

}  // namespace sonolab::ops
