#include "sonolab/operations.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "sonolab/ops.hpp"

namespace sonolab {

namespace {

template <typename T>
T take_as(TensorFrame& frame, const std::string& op, const char* what) {
  if (auto* t = std::get_if<T>(&frame)) return std::move(*t);
  throw Error(ErrorKind::schema, op + " expects " + what + " input");
}

ops::PixelSet pixels_from(const ParameterBag& params) {
  if (params.contains("pixel_x")) {
    ops::PixelSet pixels{params.array("pixel_x"), params.array("pixel_z")};
    if (pixels.x.size() != pixels.z.size()) {
      throw Error(ErrorKind::parameter, "pixel_x and pixel_z lengths differ");
    }
    return pixels;
  }
  return ops::flatten_grid({params.array("grid_z"), params.array("grid_x")});
}

std::vector<std::string> transmit_params() {
  return {"transmit_type", "element_positions"};
}

std::vector<std::string> with_transmit_geometry(std::vector<std::string> required,
                                                const ParameterBag& params) {
  if (params.contains("transmit_type")) {
    const auto* type = std::get_if<std::string>(&params.at("transmit_type"));
    required.push_back(type && *type == "plane_wave" ? "steering_angles" : "virtual_sources");
  }
  return required;
}

}  // namespace

std::vector<std::string> Demodulate::required_params() const {
  return {"demodulation_frequency", "sampling_frequency"};
}

std::vector<std::string> Demodulate::provided_params() const { return {"sampling_frequency"}; }

OpOutput Demodulate::call(TensorFrame input, const ParameterBag& params) const {
  auto rf = take_as<RealTensor>(input, name(), "real RF");
  const double fs = params.scalar("sampling_frequency");
  const double decimation = params.scalar_or("decimation", 1.0);
  if (!(decimation >= 1.0) || decimation != std::floor(decimation)) {
    throw Error(ErrorKind::parameter, "decimation must be a positive integer");
  }
  const auto dec = static_cast<std::size_t>(decimation);
  std::vector<double> t0;
  if (params.contains("initial_times")) t0 = params.array("initial_times");
  OpOutput out;
  out.data = ops::demodulate(rf, params.scalar("demodulation_frequency"), fs, dec, t0);
  out.updates.set("sampling_frequency", fs / decimation);
  return out;
}

std::vector<std::string> TOFCorrection::required_params() const {
  auto p = transmit_params();
  p.insert(p.end(), {"sound_speed", "sampling_frequency", "demodulation_frequency",
                     "initial_times", "grid_x", "grid_z"});
  return p;
}

std::vector<std::string> TOFCorrection::requirements(const ParameterBag& params) const {
  return with_transmit_geometry(required_params(), params);
}

OpOutput TOFCorrection::call(TensorFrame input, const ParameterBag& params) const {
  auto iq = take_as<ComplexTensor>(input, name(), "complex IQ (add Demodulate first)");
  ops::TofParams tof;
  tof.element_positions = unflatten(params.array("element_positions"));
  tof.transmit = TransmitGeometry::from_parameters(params);
  tof.sound_speed = params.scalar("sound_speed");
  tof.sampling_frequency = params.scalar("sampling_frequency");
  tof.demodulation_frequency = params.scalar("demodulation_frequency");
  tof.initial_times = params.array("initial_times");
  return {ops::tof_correct(iq, pixels_from(params), tof), {}};
}

std::vector<std::string> PfieldWeighting::required_params() const {
  auto p = transmit_params();
  p.insert(p.end(), {"f_number", "grid_x", "grid_z"});
  return p;
}

std::vector<std::string> PfieldWeighting::requirements(const ParameterBag& params) const {
  return with_transmit_geometry(required_params(), params);
}

OpOutput PfieldWeighting::call(TensorFrame input, const ParameterBag& params) const {
  auto aligned = take_as<ComplexTensor>(input, name(), "aligned complex");
  return {ops::pfield_weight(std::move(aligned), pixels_from(params),
                             unflatten(params.array("element_positions")),
                             TransmitGeometry::from_parameters(params), params.scalar("f_number")),
          {}};
}

OpOutput DelayAndSum::call(TensorFrame input, const ParameterBag& params) const {
  auto aligned = take_as<ComplexTensor>(input, name(), "aligned complex");
  ComplexTensor summed = ops::delay_and_sum(aligned);
  if (!params.contains("pixel_x") && params.contains("grid_z") && params.contains("grid_x")) {
    const std::size_t n_z = params.array("grid_z").size();
    const std::size_t n_x = params.array("grid_x").size();
    if (n_z * n_x == summed.extent(1)) {
      const std::size_t n_frames = summed.extent(0);
      summed = std::move(summed).reshaped({Axis::frame, Axis::z, Axis::x}, {n_frames, n_z, n_x});
    }
  }
  return {std::move(summed), {}};
}

OpOutput EnvelopeDetect::call(TensorFrame input, const ParameterBag& /*params*/) const {
  if (auto* real = std::get_if<RealTensor>(&input)) {
    for (double& v : real->values()) v = std::abs(v);
    return {std::move(*real), {}};
  }
  return {ops::envelope(std::get<ComplexTensor>(input)), {}};
}

OpOutput Normalize::call(TensorFrame input, const ParameterBag& /*params*/) const {
  return {ops::normalize(take_as<RealTensor>(input, name(), "real")), {}};
}

OpOutput LogCompress::call(TensorFrame input, const ParameterBag& params) const {
  return {ops::log_compress(take_as<RealTensor>(input, name(), "real"),
                            params.pair("dynamic_range").first),
          {}};
}

OpOutput ClipMapRange::call(TensorFrame input, const ParameterBag& params) const {
  return {ops::clip_map_range(take_as<RealTensor>(input, name(), "real"),
                              params.pair("dynamic_range"), params.pair("normalization_range")),
          {}};
}

OpOutput ScanConvert::call(TensorFrame input, const ParameterBag& params) const {
  ops::ScanConvertParams sc;
  sc.rho_range = params.pair("rho_range");
  sc.theta_range = params.pair("theta_range");
  const double order = params.scalar_or("order", 1.0);
  if (order != std::floor(order)) throw Error(ErrorKind::parameter, "order must be an integer");
  sc.order = static_cast<int>(order);
  if (params.contains("out_shape")) {
    const auto [h, w] = params.pair("out_shape");
    if (!(h >= 2.0) || !(w >= 2.0)) throw Error(ErrorKind::parameter, "out_shape must be >= 2");
    sc.out_shape = {static_cast<std::size_t>(h), static_cast<std::size_t>(w)};
  }
  sc.fill = params.scalar_or("fill", 0.0);
  return {ops::scan_convert(take_as<RealTensor>(input, name(), "real"), sc), {}};
}

PatchedGrid::PatchedGrid(std::vector<OperationPtr> operations, std::size_t num_patches,
                         OperationOptions options)
    : Operation(std::move(options)), operations_(std::move(operations)), num_patches_(num_patches) {
  if (num_patches_ == 0) throw Error(ErrorKind::parameter, "num_patches must be >= 1");
  if (operations_.empty()) throw Error(ErrorKind::config, "PatchedGrid needs inner operations");
  for (std::size_t i = 1; i < operations_.size(); ++i) {
    if (operations_[i]->input_key() != operations_[i - 1]->output_key()) {
      throw Error(ErrorKind::config, "PatchedGrid inner operations do not chain at '" +
                                         operations_[i]->name() + "'");
    }
  }
}

std::vector<std::string> PatchedGrid::required_params() const {
  std::set<std::string> provided;
  std::vector<std::string> required{"grid_x", "grid_z"};
  for (const auto& op : operations_) {
    for (const auto& p : op->required_params()) {
      if (!provided.count(p) && !op->static_params().contains(p) &&
          std::find(required.begin(), required.end(), p) == required.end()) {
        required.push_back(p);
      }
    }
    for (const auto& p : op->provided_params()) provided.insert(p);
  }
  return required;
}

std::vector<std::string> PatchedGrid::requirements(const ParameterBag& params) const {
  std::vector<std::string> required = required_params();
  for (const auto& op : operations_) {
    for (const auto& p : op->requirements(merge_parameters(params, op->static_params()))) {
      if (std::find(required.begin(), required.end(), p) == required.end() &&
          !op->static_params().contains(p)) {
        required.push_back(p);
      }
    }
  }
  return required;
}

std::vector<std::size_t> PatchedGrid::partition(const ParameterBag& params) const {
  if (!params.contains("grid_x") || !params.contains("grid_z")) return {};
  return patch_boundaries(params.array("grid_z").size() * params.array("grid_x").size(),
                          num_patches_);
}

OpOutput PatchedGrid::call(TensorFrame input, const ParameterBag& params) const {
  return {run_patched(operations_, num_patches_, std::move(input), params), {}};
}

namespace {

using Factory = std::function<OperationPtr(OperationOptions)>;

const std::map<std::string, Factory>& registry() {
  static const std::map<std::string, Factory> factories{
      {"Demodulate", [](OperationOptions o) { return std::make_shared<Demodulate>(std::move(o)); }},
      {"TOFCorrection",
       [](OperationOptions o) { return std::make_shared<TOFCorrection>(std::move(o)); }},
      {"PfieldWeighting",
       [](OperationOptions o) { return std::make_shared<PfieldWeighting>(std::move(o)); }},
      {"DelayAndSum", [](OperationOptions o) { return std::make_shared<DelayAndSum>(std::move(o)); }},
      {"EnvelopeDetect",
       [](OperationOptions o) { return std::make_shared<EnvelopeDetect>(std::move(o)); }},
      {"Normalize", [](OperationOptions o) { return std::make_shared<Normalize>(std::move(o)); }},
      {"LogCompress", [](OperationOptions o) { return std::make_shared<LogCompress>(std::move(o)); }},
      {"ClipMapRange",
       [](OperationOptions o) { return std::make_shared<ClipMapRange>(std::move(o)); }},
      {"ScanConvert", [](OperationOptions o) { return std::make_shared<ScanConvert>(std::move(o)); }},
  };
  return factories;
}

}  // namespace

std::vector<std::string> known_operations() {
  std::vector<std::string> names;
  for (const auto& [name, _] : registry()) names.push_back(name);
  names.push_back("PatchedGrid");
  std::sort(names.begin(), names.end());
  return names;
}

OperationPtr make_operation(const std::string& name, OperationOptions options) {
  const auto& reg = registry();
  auto it = reg.find(name);
  if (it == reg.end()) {
    std::string known;
    for (const auto& n : known_operations()) known += (known.empty() ? "" : ", ") + n;
    throw Error(ErrorKind::config, "unknown operation '" + name + "'; known operations: " + known);
  }
  return it->second(std::move(options));
}

Pipeline default_bmode_pipeline(std::size_t num_patches) {
  std::vector<OperationPtr> inner{std::make_shared<TOFCorrection>(),
                                  std::make_shared<PfieldWeighting>(),
                                  std::make_shared<DelayAndSum>()};
  return Pipeline({std::make_shared<Demodulate>(),
                   std::make_shared<PatchedGrid>(std::move(inner), num_patches),
                   std::make_shared<EnvelopeDetect>(), std::make_shared<Normalize>(),
                   std::make_shared<LogCompress>()});
}

Pipeline unpatched_bmode_pipeline() {
  return Pipeline({std::make_shared<Demodulate>(), std::make_shared<TOFCorrection>(),
                   std::make_shared<PfieldWeighting>(), std::make_shared<DelayAndSum>(),
                   std::make_shared<EnvelopeDetect>(), std::make_shared<Normalize>(),
                   std::make_shared<LogCompress>()});
}

}  // namespace sonolab
