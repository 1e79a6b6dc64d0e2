#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "sonolab/error.hpp"

namespace sonolab {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const Vec3&, const Vec3&) = default;
};

double distance(const Vec3& a, const Vec3& b);

/// Linear transducer array. Positions in meters.
struct Probe {
  std::vector<Vec3> element_positions;
  double pitch = 0.0;
  std::string name;

  /// Elements centred on x = 0 at y = z = 0.
  static Probe linear(std::size_t n_elements, double pitch, std::string name = "linear");

  std::size_t n_elements() const noexcept { return element_positions.size(); }
  double aperture_width() const;
  double aperture_min_x() const;
  double aperture_max_x() const;

  /// Throws ErrorKind::invalid_scan when the geometry is not a valid linear array.
  void validate() const;

  friend bool operator==(const Probe&, const Probe&) = default;
};

enum class TransmitType { plane_wave, diverging, focused };

std::string to_string(TransmitType type);
TransmitType transmit_type_from_string(const std::string& text);

/// Acquisition parameters, SI units throughout.
struct Scan {
  double sound_speed = 1540.0;
  double center_frequency = 5e6;
  double sampling_frequency = 20e6;
  double demodulation_frequency = 5e6;
  TransmitType transmit_type = TransmitType::plane_wave;
  std::vector<double> steering_angles;  // plane_wave only
  std::vector<Vec3> virtual_sources;    // focused / diverging only
  std::vector<double> initial_times;
  std::pair<double, double> xlims{-20e-3, 20e-3};
  std::pair<double, double> zlims{0.0, 80e-3};
  std::array<std::size_t, 2> grid_shape{256, 256};  // (n_z, n_x)

  std::size_t n_tx() const noexcept;

  /// Throws ErrorKind::invalid_scan when an invariant is violated.
  void validate() const;

  friend bool operator==(const Scan&, const Scan&) = default;
};

/// Pixel-centre coordinates of a Cartesian imaging grid.
struct CartesianGrid {
  std::vector<double> z;
  std::vector<double> x;

  std::size_t n_pixels() const noexcept { return z.size() * x.size(); }
};

/// Shortest text that reads back to the same double. Fixed notation for
/// ordinary magnitudes, scientific otherwise.
std::string format_number(double v);

/// n points from lo to hi, endpoints exact.
std::vector<double> linspace(double lo, double hi, std::size_t n);

CartesianGrid make_cartesian_grid(const Scan& scan);

/// Flat name -> value map flowing through a pipeline.
class ParameterBag {
 public:
  using Pair = std::pair<double, double>;
  using Value = std::variant<double, std::vector<double>, Pair, std::string>;
  using Map = std::map<std::string, Value>;

  ParameterBag() = default;
  ParameterBag(std::initializer_list<Map::value_type> entries) : entries_(entries) {}

  void set(const std::string& name, Value value) { entries_[name] = std::move(value); }
  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  std::size_t erase(const std::string& name) { return entries_.erase(name); }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  const Value& at(const std::string& name) const;
  double scalar(const std::string& name) const;
  double scalar_or(const std::string& name, double fallback) const;
  const std::vector<double>& array(const std::string& name) const;
  Pair pair(const std::string& name) const;
  const std::string& text(const std::string& name) const;

  std::vector<std::string> keys() const;
  Map::const_iterator begin() const { return entries_.begin(); }
  Map::const_iterator end() const { return entries_.end(); }

  friend bool operator==(const ParameterBag&, const ParameterBag&) = default;

 private:
  Map entries_;
};

/// Union of both bags; on key collision the override wins.
ParameterBag merge_parameters(const ParameterBag& prepared, const ParameterBag& overrides);

}  // namespace sonolab
