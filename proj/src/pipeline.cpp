#include "sonolab/pipeline.hpp"

#include <algorithm>
#include <set>

#include "sonolab/delays.hpp"

namespace sonolab {

OperationSpec Operation::spec() const {
  return {name(), input_key(), output_key(), required_params(), true};
}

Pipeline::Pipeline(std::vector<OperationPtr> operations, std::string key)
    : operations_(std::move(operations)), key_(std::move(key)) {
  for (const auto& op : operations_) {
    if (!op) throw Error(ErrorKind::config, "pipeline operations must not be null");
  }
  output_key_ = operations_.empty() ? key_ : operations_.back()->output_key();
}

std::vector<OperationSpec> Pipeline::specs() const {
  std::vector<OperationSpec> out;
  out.reserve(operations_.size());
  for (const auto& op : operations_) out.push_back(op->spec());
  return out;
}

ExecutionPlan Pipeline::validate(const ParameterBag& bag) const {
  ExecutionPlan plan;
  plan.input_key = key_;
  std::map<std::string, std::string> provided_by;
  std::string current = key_;
  for (const auto& op : operations_) {
    if (op->input_key() != current) {
      throw Error(ErrorKind::config, "operation '" + op->name() + "' expects input key '" +
                                         op->input_key() + "' but the previous output key is '" +
                                         current + "'");
    }
    PlannedStep step;
    step.operation = op->name();
    const ParameterBag effective = merge_parameters(bag, op->static_params());
    for (const std::string& p : op->requirements(effective)) {
      if (op->static_params().contains(p)) {
        step.bindings[p] = "static";
      } else if (auto it = provided_by.find(p); it != provided_by.end()) {
        step.bindings[p] = "op:" + it->second;
      } else if (bag.contains(p)) {
        step.bindings[p] = "bag";
      } else {
        throw Error(ErrorKind::parameter, "operation '" + op->name() + "' requires parameter '" +
                                              p + "', which is not bound");
      }
    }
    step.patch_boundaries = op->partition(effective);
    for (const std::string& p : op->provided_params()) provided_by[p] = op->name();
    plan.steps.push_back(std::move(step));
    current = op->output_key();
  }
  plan.output_key = current;
  plan.validated = true;
  return plan;
}

TensorMap Pipeline::run(TensorMap inputs, const ParameterBag& bag) const {
  return run(validate(bag), std::move(inputs), bag);
}

TensorMap Pipeline::run(const ExecutionPlan& plan, TensorMap inputs, const ParameterBag& bag) const {
  if (!plan.validated || plan.steps.size() != operations_.size()) {
    throw Error(ErrorKind::config, "execution plan does not belong to this pipeline");
  }
  if (!operations_.empty() && inputs.count(key_) == 0) {
    throw Error(ErrorKind::key, "pipeline input '" + key_ + "' is missing");
  }
  ParameterBag flowing = bag;
  for (const auto& op : operations_) {
    auto it = inputs.find(op->input_key());
    TensorFrame input = op->retains_input() ? it->second : std::move(it->second);
    if (!op->retains_input()) inputs.erase(it);
    OpOutput result;
    try {
      result = op->call(std::move(input), merge_parameters(flowing, op->static_params()));
    } catch (const Error& e) {
      throw e.with_context("operation '" + op->name() + "'");
    }
    inputs.insert_or_assign(op->output_key(), std::move(result.data));
    if (!result.updates.empty()) flowing = merge_parameters(flowing, result.updates);
  }
  return inputs;
}

TensorFrame Pipeline::operator()(TensorFrame input, const ParameterBag& bag) const {
  TensorMap inputs;
  inputs.emplace(key_, std::move(input));
  TensorMap out = run(std::move(inputs), bag);
  return std::move(out.at(output_key_));
}

ParameterBag prepare_parameters(const Probe& probe, const Scan& scan) {
  probe.validate();
  scan.validate();
  const CartesianGrid grid = make_cartesian_grid(scan);
  ParameterBag bag;
  bag.set("element_positions", flatten(probe.element_positions));
  bag.set("sound_speed", scan.sound_speed);
  bag.set("center_frequency", scan.center_frequency);
  bag.set("sampling_frequency", scan.sampling_frequency);
  bag.set("demodulation_frequency", scan.demodulation_frequency);
  bag.set("transmit_type", to_string(scan.transmit_type));
  if (scan.transmit_type == TransmitType::plane_wave) {
    bag.set("steering_angles", scan.steering_angles);
  } else {
    bag.set("virtual_sources", flatten(scan.virtual_sources));
  }
  bag.set("initial_times", scan.initial_times);
  bag.set("xlims", scan.xlims);
  bag.set("zlims", scan.zlims);
  bag.set("grid_shape", ParameterBag::Pair{static_cast<double>(scan.grid_shape[0]),
                                           static_cast<double>(scan.grid_shape[1])});
  bag.set("grid_z", grid.z);
  bag.set("grid_x", grid.x);
  bag.set("f_number", 1.0);
  bag.set("dynamic_range", ParameterBag::Pair{-60.0, 0.0});
  bag.set("normalization_range", ParameterBag::Pair{0.0, 1.0});
  return bag;
}

std::vector<std::size_t> patch_boundaries(std::size_t n_pixels, std::size_t num_patches) {
  if (num_patches == 0) throw Error(ErrorKind::parameter, "num_patches must be >= 1");
  if (n_pixels == 0) return {0};
  const std::size_t p = std::min(num_patches, n_pixels);
  std::vector<std::size_t> bounds(p + 1);
  for (std::size_t i = 0; i <= p; ++i) bounds[i] = (i * n_pixels + p - 1) / p;
  return bounds;
}

namespace {

template <typename T>
void scatter_chunk(const Tensor<T>& chunk, std::size_t frame, std::size_t begin,
                   std::size_t n_pixels, std::vector<T>& dst) {
  if (chunk.rank() != 2 || chunk.extent(0) != 1) {
    throw Error(ErrorKind::schema, "patched operations must emit (frame, pixel) per chunk");
  }
  std::copy(chunk.values().begin(), chunk.values().end(),
            dst.begin() + static_cast<std::ptrdiff_t>(frame * n_pixels + begin));
}

}  // namespace

TensorFrame run_patched(std::span<const OperationPtr> inner_ops, std::size_t num_patches,
                        TensorFrame input, const ParameterBag& bag) {
  if (inner_ops.empty()) throw Error(ErrorKind::config, "PatchedGrid needs inner operations");
  const std::vector<double>& grid_z = bag.array("grid_z");
  const std::vector<double>& grid_x = bag.array("grid_x");
  const std::size_t n_pixels = grid_z.size() * grid_x.size();
  const auto bounds = patch_boundaries(n_pixels, num_patches);

  std::vector<double> all_x, all_z;
  all_x.reserve(n_pixels);
  all_z.reserve(n_pixels);
  for (double z : grid_z) {
    for (double x : grid_x) {
      all_x.push_back(x);
      all_z.push_back(z);
    }
  }

  Pipeline inner(std::vector<OperationPtr>(inner_ops.begin(), inner_ops.end()),
                 inner_ops.front()->input_key());
  const std::size_t n_frames = shape_of(input).at(0);

  std::vector<Complex> complex_out;
  std::vector<double> real_out;
  bool complex_result = true;
  ExecutionPlan plan;

  for (std::size_t f = 0; f < n_frames; ++f) {
    const std::size_t index[] = {f};
    TensorFrame frame = std::visit([&](const auto& t) -> TensorFrame { return t.take(index); }, input);
    for (std::size_t c = 0; c + 1 < bounds.size(); ++c) {
      const std::size_t begin = bounds[c];
      const std::size_t end = bounds[c + 1];
      ParameterBag chunk_bag = bag;
      chunk_bag.set("pixel_x", std::vector<double>(all_x.begin() + static_cast<std::ptrdiff_t>(begin),
                                                   all_x.begin() + static_cast<std::ptrdiff_t>(end)));
      chunk_bag.set("pixel_z", std::vector<double>(all_z.begin() + static_cast<std::ptrdiff_t>(begin),
                                                   all_z.begin() + static_cast<std::ptrdiff_t>(end)));
      if (!plan.validated) plan = inner.validate(chunk_bag);
      TensorMap io;
      io.emplace(inner.key(), frame);
      TensorMap result = inner.run(plan, std::move(io), chunk_bag);
      const TensorFrame& chunk = result.at(inner.output_key());
      if (f == 0 && c == 0) {
        complex_result = is_complex(chunk);
        if (complex_result) {
          complex_out.resize(n_frames * n_pixels);
        } else {
          real_out.resize(n_frames * n_pixels);
        }
      }
      if (is_complex(chunk) != complex_result) {
        throw Error(ErrorKind::schema, "patched chunks changed element type");
      }
      if (complex_result) {
        scatter_chunk(std::get<ComplexTensor>(chunk), f, begin, n_pixels, complex_out);
      } else {
        scatter_chunk(std::get<RealTensor>(chunk), f, begin, n_pixels, real_out);
      }
    }
  }

  std::vector<Axis> axes{Axis::frame, Axis::z, Axis::x};
  std::vector<std::size_t> shape{n_frames, grid_z.size(), grid_x.size()};
  if (complex_result) return ComplexTensor(std::move(axes), std::move(shape), std::move(complex_out));
  return RealTensor(std::move(axes), std::move(shape), std::move(real_out));
}

}  // namespace sonolab
