#include "sonolab/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace sonolab {

double distance(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Probe Probe::linear(std::size_t n_elements, double pitch, std::string name) {
  Probe probe;
  probe.pitch = pitch;
  probe.name = std::move(name);
  probe.element_positions.reserve(n_elements);
  const double center = 0.5 * static_cast<double>(n_elements - 1);
  for (std::size_t i = 0; i < n_elements; ++i) {
    probe.element_positions.push_back({(static_cast<double>(i) - center) * pitch, 0.0, 0.0});
  }
  return probe;
}

double Probe::aperture_min_x() const {
  return element_positions.empty() ? 0.0 : element_positions.front().x;
}

double Probe::aperture_max_x() const {
  return element_positions.empty() ? 0.0 : element_positions.back().x;
}

double Probe::aperture_width() const { return aperture_max_x() - aperture_min_x(); }

void Probe::validate() const {
  if (element_positions.empty()) {
    throw Error(ErrorKind::invalid_scan, "probe must have at least one element");
  }
  const Vec3& first = element_positions.front();
  for (std::size_t i = 0; i < element_positions.size(); ++i) {
    const Vec3& p = element_positions[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z)) {
      throw Error(ErrorKind::invalid_scan, "probe element " + std::to_string(i) + " is not finite");
    }
    if (p.y != first.y || p.z != first.z) {
      throw Error(ErrorKind::invalid_scan, "linear probe elements must share y and z");
    }
    if (i > 0 && !(p.x > element_positions[i - 1].x)) {
      throw Error(ErrorKind::invalid_scan, "probe element x positions must be strictly increasing");
    }
  }
  const double expected = static_cast<double>(element_positions.size() - 1) * pitch;
  if (std::abs(aperture_width() - expected) > 1e-9) {
    throw Error(ErrorKind::invalid_scan, "probe aperture width disagrees with (n_el - 1) * pitch");
  }
}

std::string to_string(TransmitType type) {
  switch (type) {
    case TransmitType::plane_wave: return "plane_wave";
    case TransmitType::diverging: return "diverging";
    case TransmitType::focused: return "focused";
  }
  return "plane_wave";
}

TransmitType transmit_type_from_string(const std::string& text) {
  if (text == "plane_wave") return TransmitType::plane_wave;
  if (text == "diverging") return TransmitType::diverging;
  if (text == "focused") return TransmitType::focused;
  throw Error(ErrorKind::parameter, "unknown transmit_type '" + text + "'");
}

std::size_t Scan::n_tx() const noexcept {
  return transmit_type == TransmitType::plane_wave ? steering_angles.size()
                                                   : virtual_sources.size();
}

void Scan::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::invalid_scan, msg); };
  if (!(sound_speed > 0.0) || !std::isfinite(sound_speed)) fail("sound_speed must be > 0");
  if (!(sampling_frequency > 0.0)) fail("sampling_frequency must be > 0");
  if (!(center_frequency > 0.0)) fail("center_frequency must be > 0");
  if (!(demodulation_frequency >= 0.0)) fail("demodulation_frequency must be >= 0");
  if (!(xlims.first < xlims.second)) fail("xlims must satisfy xlims.0 < xlims.1");
  if (!(zlims.first < zlims.second)) fail("zlims must satisfy zlims.0 < zlims.1");
  if (grid_shape[0] < 2 || grid_shape[1] < 2) fail("grid_shape components must be >= 2");

  const bool plane = transmit_type == TransmitType::plane_wave;
  if (plane && !virtual_sources.empty()) fail("plane_wave scans must not carry virtual_sources");
  if (!plane && !steering_angles.empty()) {
    fail("focused/diverging scans must not carry steering_angles");
  }
  if (n_tx() == 0) fail("scan needs at least one transmit");
  if (initial_times.size() != n_tx()) fail("initial_times length must equal n_tx");
}

std::string format_number(double v) {
  if (v == 0.0) return "0";
  char buf[400];
  const double mag = std::fabs(v);
  const bool fixed = mag >= 1e-5 && mag < 1e15;
  auto res = fixed ? std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed)
                   : std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  const double span = hi - lo;
  const double denom = static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) v[i] = lo + span * (static_cast<double>(i) / denom);
  v.front() = lo;
  v.back() = hi;
  return v;
}

CartesianGrid make_cartesian_grid(const Scan& scan) {
  scan.validate();
  return {linspace(scan.zlims.first, scan.zlims.second, scan.grid_shape[0]),
          linspace(scan.xlims.first, scan.xlims.second, scan.grid_shape[1])};
}

const ParameterBag::Value& ParameterBag::at(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw Error(ErrorKind::parameter, "missing parameter '" + name + "'");
  }
  return it->second;
}

double ParameterBag::scalar(const std::string& name) const {
  const Value& v = at(name);
  if (const double* d = std::get_if<double>(&v)) return *d;
  throw Error(ErrorKind::parameter, "parameter '" + name + "' is not a scalar");
}

double ParameterBag::scalar_or(const std::string& name, double fallback) const {
  return contains(name) ? scalar(name) : fallback;
}

const std::vector<double>& ParameterBag::array(const std::string& name) const {
  const Value& v = at(name);
  if (const auto* a = std::get_if<std::vector<double>>(&v)) return *a;
  throw Error(ErrorKind::parameter, "parameter '" + name + "' is not an array");
}

ParameterBag::Pair ParameterBag::pair(const std::string& name) const {
  const Value& v = at(name);
  if (const auto* p = std::get_if<Pair>(&v)) return *p;
  if (const auto* a = std::get_if<std::vector<double>>(&v); a && a->size() == 2) {
    return {(*a)[0], (*a)[1]};
  }
  throw Error(ErrorKind::parameter, "parameter '" + name + "' is not a pair");
}

const std::string& ParameterBag::text(const std::string& name) const {
  const Value& v = at(name);
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  throw Error(ErrorKind::parameter, "parameter '" + name + "' is not text");
}

std::vector<std::string> ParameterBag::keys() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, _] : entries_) out.push_back(k);
  return out;
}

ParameterBag merge_parameters(const ParameterBag& prepared, const ParameterBag& overrides) {
  ParameterBag merged = prepared;
  for (const auto& [k, v] : overrides) merged.set(k, v);
  return merged;
}

}  // namespace sonolab
