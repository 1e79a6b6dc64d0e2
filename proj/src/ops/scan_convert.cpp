#include <algorithm>
#include <cmath>
#include <numbers>

#include "sonolab/ops.hpp"
#include "sonolab/parallel.hpp"

namespace sonolab::ops {

namespace {

void check_params(const ScanConvertParams& p) {
  const double half_pi = 0.5 * std::numbers::pi;
  if (!(p.theta_range.first < p.theta_range.second) || p.theta_range.first <= -half_pi ||
      p.theta_range.second >= half_pi) {
    throw Error(ErrorKind::parameter, "theta_range must be increasing and within (-pi/2, pi/2)");
  }
  if (!(p.rho_range.first >= 0.0) || !(p.rho_range.first < p.rho_range.second)) {
    throw Error(ErrorKind::parameter, "rho_range must be increasing with rho_range.0 >= 0");
  }
  if (p.order < 0 || p.order > 2) {
    throw Error(ErrorKind::parameter, "scan_convert order must be 0, 1 or 2");
  }
}

// Catmull-Rom segment between p1 and p2, written in differences so that a
// constant neighbourhood is reproduced exactly.
double catmull_rom(double p0, double p1, double p2, double p3, double t) {
  const double c1 = 0.5 * (p2 - p0);
  const double c2 = (p0 - p1) - 1.5 * (p1 - p2) + 0.5 * (p2 - p3);
  const double c3 = 1.5 * (p1 - p2) + 0.5 * (p3 - p0);
  return p1 + t * (c1 + t * (c2 + t * c3));
}

double lerp(double a, double b, double t) { return a + t * (b - a); }

double sample(const double* img, std::size_t n_rho, std::size_t n_theta, double fi, double fj,
              int order) {
  auto at = [&](std::ptrdiff_t i, std::ptrdiff_t j) {
    i = std::clamp<std::ptrdiff_t>(i, 0, static_cast<std::ptrdiff_t>(n_rho) - 1);
    j = std::clamp<std::ptrdiff_t>(j, 0, static_cast<std::ptrdiff_t>(n_theta) - 1);
    return img[static_cast<std::size_t>(i) * n_theta + static_cast<std::size_t>(j)];
  };
  if (order == 0) {
    return at(static_cast<std::ptrdiff_t>(std::lround(fi)), static_cast<std::ptrdiff_t>(std::lround(fj)));
  }
  const double fl_i = std::floor(fi);
  const double fl_j = std::floor(fj);
  const double ti = fi - fl_i;
  const double tj = fj - fl_j;
  const auto i0 = static_cast<std::ptrdiff_t>(fl_i);
  const auto j0 = static_cast<std::ptrdiff_t>(fl_j);
  if (order == 1) {
    return lerp(lerp(at(i0, j0), at(i0, j0 + 1), tj), lerp(at(i0 + 1, j0), at(i0 + 1, j0 + 1), tj), ti);
  }
  std::array<double, 4> rows{};
  for (std::ptrdiff_t a = 0; a < 4; ++a) {
    const std::ptrdiff_t i = i0 + a - 1;
    rows[static_cast<std::size_t>(a)] =
        catmull_rom(at(i, j0 - 1), at(i, j0), at(i, j0 + 1), at(i, j0 + 2), tj);
  }
  return catmull_rom(rows[0], rows[1], rows[2], rows[3], ti);
}

}  // namespace

CartesianGrid scan_convert_grid(const ScanConvertParams& params,
                                std::array<std::size_t, 2> out_shape) {
  check_params(params);
  const auto [r0, r1] = params.rho_range;
  const auto [t0, t1] = params.theta_range;
  const double tc = std::clamp(0.0, t0, t1);
  const std::array<std::pair<double, double>, 5> pts{
      {{r0, t0}, {r0, t1}, {r1, t0}, {r1, t1}, {r1, tc}}};
  double x_lo = INFINITY, x_hi = -INFINITY, z_lo = INFINITY, z_hi = -INFINITY;
  for (const auto& [r, t] : pts) {
    x_lo = std::min(x_lo, r * std::sin(t));
    x_hi = std::max(x_hi, r * std::sin(t));
    z_lo = std::min(z_lo, r * std::cos(t));
    z_hi = std::max(z_hi, r * std::cos(t));
  }
  return {linspace(z_lo, z_hi, out_shape[0]), linspace(x_lo, x_hi, out_shape[1])};
}

RealTensor scan_convert(const RealTensor& polar, const ScanConvertParams& params) {
  check_params(params);
  if (polar.rank() < 2) throw Error(ErrorKind::schema, "scan_convert expects (..., rho, theta) input");
  const std::size_t n_rho = polar.extent(polar.rank() - 2);
  const std::size_t n_theta = polar.extent(polar.rank() - 1);
  if (n_rho < 2 || n_theta < 2) {
    throw Error(ErrorKind::schema, "scan_convert needs at least 2 samples in rho and theta");
  }
  std::array<std::size_t, 2> out_shape = params.out_shape;
  if (out_shape[0] == 0 || out_shape[1] == 0) out_shape = {n_rho, n_theta};
  if (out_shape[0] < 2 || out_shape[1] < 2) {
    throw Error(ErrorKind::parameter, "scan_convert out_shape components must be >= 2");
  }
  const CartesianGrid grid = scan_convert_grid(params, out_shape);

  std::vector<Axis> axes = polar.axes();
  axes[axes.size() - 2] = Axis::z;
  axes[axes.size() - 1] = Axis::x;
  std::vector<std::size_t> shape = polar.shape();
  shape[shape.size() - 2] = out_shape[0];
  shape[shape.size() - 1] = out_shape[1];
  const std::size_t n_slices = polar.size() / (n_rho * n_theta);
  const std::size_t n_out = out_shape[0] * out_shape[1];
  RealTensor out(std::move(axes), std::move(shape), params.fill);

  const auto [r0, r1] = params.rho_range;
  const auto [t0, t1] = params.theta_range;
  const double rho_scale = static_cast<double>(n_rho - 1) / (r1 - r0);
  const double theta_scale = static_cast<double>(n_theta - 1) / (t1 - t0);
  constexpr double kEdge = 1e-9;

  parallel_for(n_out, [&](std::size_t begin, std::size_t end) {
    for (std::size_t q = begin; q < end; ++q) {
      const double z = grid.z[q / out_shape[1]];
      const double x = grid.x[q % out_shape[1]];
      const double r = std::hypot(x, z);
      const double t = std::atan2(x, z);
      double fi = (r - r0) * rho_scale;
      double fj = (t - t0) * theta_scale;
      if (fi < -kEdge || fi > static_cast<double>(n_rho - 1) + kEdge || fj < -kEdge ||
          fj > static_cast<double>(n_theta - 1) + kEdge) {
        continue;
      }
      fi = std::clamp(fi, 0.0, static_cast<double>(n_rho - 1));
      fj = std::clamp(fj, 0.0, static_cast<double>(n_theta - 1));
      for (std::size_t s = 0; s < n_slices; ++s) {
        out[s * n_out + q] =
            sample(polar.values().data() + s * n_rho * n_theta, n_rho, n_theta, fi, fj, params.order);
      }
    }
  });
  return out;
}

}  // namespace sonolab::ops
