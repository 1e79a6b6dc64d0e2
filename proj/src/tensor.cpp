#include "sonolab/tensor.hpp"

#include <array>
#include <sstream>

namespace sonolab {

namespace {

constexpr std::array<std::pair<Axis, std::string_view>, 12> kAxisNames{{
    {Axis::frame, "frame"},
    {Axis::tx, "tx"},
    {Axis::el, "el"},
    {Axis::sample, "sample"},
    {Axis::z, "z"},
    {Axis::x, "x"},
    {Axis::rho, "rho"},
    {Axis::theta, "theta"},
    {Axis::particle, "particle"},
    {Axis::channel, "channel"},
    {Axis::pixel, "pixel"},
    {Axis::batch, "batch"},
}};

}  // namespace

std::string_view axis_name(Axis axis) {
  for (const auto& [a, name] : kAxisNames) {
    if (a == axis) return name;
  }
  return "?";
}

Axis axis_from_name(std::string_view name) {
  for (const auto& [a, n] : kAxisNames) {
    if (n == name) return a;
  }
  throw Error(ErrorKind::format, "unknown axis label '" + std::string(name) + "'");
}

std::string axes_to_string(std::span<const Axis> axes) {
  std::string out;
  for (std::size_t i = 0; i < axes.size(); ++i) {
    if (i) out += ',';
    out += axis_name(axes[i]);
  }
  return out;
}

std::vector<Axis> axes_from_string(std::string_view text) {
  std::vector<Axis> axes;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    axes.push_back(axis_from_name(text.substr(start, end - start)));
    start = end + 1;
  }
  return axes;
}

const std::vector<Axis>& axes_of(const TensorFrame& frame) {
  return std::visit([](const auto& t) -> const std::vector<Axis>& { return t.axes(); }, frame);
}

const std::vector<std::size_t>& shape_of(const TensorFrame& frame) {
  return std::visit([](const auto& t) -> const std::vector<std::size_t>& { return t.shape(); },
                    frame);
}

bool is_complex(const TensorFrame& frame) { return std::holds_alternative<ComplexTensor>(frame); }

std::string shape_to_string(std::span<const std::size_t> shape) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ", ";
    os << shape[i];
  }
  os << ')';
  return os.str();
}

}  // namespace sonolab
