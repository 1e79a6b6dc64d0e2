#include "sonolab/delays.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sonolab {

TransmitGeometry TransmitGeometry::from_scan(const Scan& scan) {
  return {scan.transmit_type, scan.steering_angles, scan.virtual_sources};
}

TransmitGeometry TransmitGeometry::from_parameters(const ParameterBag& bag) {
  TransmitGeometry tx;
  tx.type = bag.contains("transmit_type") ? transmit_type_from_string(bag.text("transmit_type"))
                                          : TransmitType::plane_wave;
  if (tx.type == TransmitType::plane_wave) {
    tx.steering_angles = bag.array("steering_angles");
  } else {
    tx.virtual_sources = unflatten(bag.array("virtual_sources"));
  }
  return tx;
}

std::size_t TransmitGeometry::n_tx() const noexcept {
  return type == TransmitType::plane_wave ? steering_angles.size() : virtual_sources.size();
}

double transmit_delay(const TransmitGeometry& tx, std::size_t k, double x, double z,
                      double sound_speed) {
  switch (tx.type) {
    case TransmitType::plane_wave: {
      const double theta = tx.steering_angles[k];
      return (z * std::cos(theta) + x * std::sin(theta)) / sound_speed;
    }
    case TransmitType::diverging: {
      const Vec3& v = tx.virtual_sources[k];
      return (distance({x, 0.0, z}, v) - std::abs(v.z)) / sound_speed;
    }
    case TransmitType::focused: {
      const Vec3& v = tx.virtual_sources[k];
      const double r = distance({x, 0.0, z}, v);
      return (v.z + (z >= v.z ? r : -r)) / sound_speed;
    }
  }
  return 0.0;
}

double receive_delay(const Vec3& element, double x, double z, double sound_speed) {
  return distance({x, 0.0, z}, element) / sound_speed;
}

std::pair<double, double> insonified_span(const TransmitGeometry& tx, std::size_t k, double z,
                                          double aperture_min_x, double aperture_max_x) {
  double lo = 0.0;
  double hi = 0.0;
  if (tx.type == TransmitType::plane_wave) {
    const double shift = z * std::tan(tx.steering_angles[k]);
    lo = aperture_min_x + shift;
    hi = aperture_max_x + shift;
  } else {
    const Vec3& v = tx.virtual_sources[k];
    if (v.z == 0.0) {
      return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    }
    const double t = z / v.z;
    lo = aperture_min_x + (v.x - aperture_min_x) * t;
    hi = aperture_max_x + (v.x - aperture_max_x) * t;
  }
  return {std::min(lo, hi), std::max(lo, hi)};
}

std::vector<double> flatten(const std::vector<Vec3>& points) {
  std::vector<double> flat;
  flat.reserve(points.size() * 3);
  for (const Vec3& p : points) {
    flat.push_back(p.x);
    flat.push_back(p.y);
    flat.push_back(p.z);
  }
  return flat;
}

std::vector<Vec3> unflatten(const std::vector<double>& flat) {
  if (flat.size() % 3 != 0) {
    throw Error(ErrorKind::parameter, "point list length must be a multiple of 3");
  }
  std::vector<Vec3> points;
  points.reserve(flat.size() / 3);
  for (std::size_t i = 0; i < flat.size(); i += 3) points.push_back({flat[i], flat[i + 1], flat[i + 2]});
  return points;
}

}  // namespace sonolab
