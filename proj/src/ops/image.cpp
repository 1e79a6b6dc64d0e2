#include <algorithm>
#include <cmath>

#include "sonolab/ops.hpp"

namespace sonolab::ops {

RealTensor envelope(const ComplexTensor& x) {
  std::vector<double> mag(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) mag[i] = std::abs(x[i]);
  return RealTensor(x.axes(), x.shape(), std::move(mag));
}

RealTensor normalize(RealTensor x) {
  if (x.rank() == 0) throw Error(ErrorKind::schema, "normalize expects a frame axis");
  const std::size_t stride = x.slice_size();
  auto values = x.values();
  for (std::size_t f = 0; f < x.extent(0); ++f) {
    auto frame = values.subspan(f * stride, stride);
    double peak = 0.0;
    for (double v : frame) {
      if (v < 0.0 || !std::isfinite(v)) {
        throw Error(ErrorKind::parameter, "normalize expects finite non-negative input");
      }
      peak = std::max(peak, v);
    }
    if (peak == 0.0) {
      throw Error(ErrorKind::degenerate_input,
                  "cannot normalize frame " + std::to_string(f) + ": all values are zero");
    }
    for (double& v : frame) v /= peak;
  }
  return x;
}

RealTensor log_compress(RealTensor x, double floor_db) {
  if (!(floor_db < 0.0)) throw Error(ErrorKind::parameter, "log_compress floor must be < 0 dB");
  const double floor_lin = std::pow(10.0, floor_db / 20.0);
  for (double& v : x.values()) {
    v = v <= floor_lin ? floor_db : std::max(floor_db, 20.0 * std::log10(v));
  }
  return x;
}

double clip_map_value(double v, Range clip, Range out_range) {
  const double c = std::clamp(v, clip.first, clip.second);
  const double t = (c - clip.first) / (clip.second - clip.first);
  return out_range.first + t * (out_range.second - out_range.first);
}

RealTensor clip_map_range(RealTensor x, Range clip, Range out_range) {
  if (!(clip.first < clip.second)) throw Error(ErrorKind::parameter, "clip range must be increasing");
  if (!(out_range.first < out_range.second)) {
    throw Error(ErrorKind::parameter, "output range must be increasing");
  }
  for (double& v : x.values()) v = clip_map_value(v, clip, out_range);
  return x;
}

}  // namespace sonolab::ops
