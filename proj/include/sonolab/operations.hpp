#pragma once

#include <memory>
#include <string>
#include <vector>

#include "sonolab/pipeline.hpp"

namespace sonolab {

// Pipeline wrappers around the kernels in ops.hpp. Parameter names match the
// keys produced by prepare_parameters().

/// IQ demodulation. Optional parameter `decimation` (default 1). Updates
/// `sampling_frequency` to the decimated rate.
class Demodulate final : public Operation {
 public:
  explicit Demodulate(OperationOptions options = {}) : Operation(std::move(options)) {}
  std::string name() const override { return "Demodulate"; }
  std::vector<std::string> required_params() const override;
  std::vector<std::string> provided_params() const override;
  OpOutput call(TensorFrame input, const ParameterBag& params) const override;
};

class TOFCorrection final : public Operation {
 public:
  explicit TOFCorrection(OperationOptions options = {}) : Operation(std::move(options)) {}
  std::string name() const override { return "TOFCorrection"; }
  std::vector<std::string> required_params() const override;
  std::vector<std::string> requirements(const ParameterBag& params) const override;
  OpOutput call(TensorFrame input, const ParameterBag& params) const override;
};

class PfieldWeighting final : public Operation {
 public:
  explicit PfieldWeighting(OperationOptions options = {}) : Operation(std::move(options)) {}
  std::string name() const override { return "PfieldWeighting"; }
  std::vector<std::string> required_params() const override;
  std::vector<std::string> requirements(const ParameterBag& params) const override;
  OpOutput call(TensorFrame input, const ParameterBag& params) const override;
};

/// Emits (frame, z, x) over the full grid, or (frame, pixel) when the bag
/// carries an explicit pixel subset (inside PatchedGrid).
class DelayAndSum final : public Operation {
 public:
  explicit DelayAndSum(OperationOptions options = {}) : Operation(std::move(options)) {}
  std::string name() const override { return "DelayAndSum"; }
  std::vector<std::string> required_params() const override { return {}; }
  OpOutput call(TensorFrame input, const ParameterBag& params) const override;
};

class EnvelopeDetect final : public Operation {
 public:
  explicit EnvelopeDetect(OperationOptions options = {}) : Operation(std::move(options)) {}
  std::string name() const override { return "EnvelopeDetect"; }
  std::vector<std::string> required_params() const override { return {}; }
  OpOutput call(TensorFrame input, const ParameterBag& params) const override;
};

class Normalize final : public Operation {
 public:
  explicit Normalize(OperationOptions options = {}) : Operation(std::move(options)) {}
  std::string name() const override { return "Normalize"; }
  std::vector<std::string> required_params() const override { return {}; }
  OpOutput call(TensorFrame input, const ParameterBag& params) const override;
};

/// Floor taken from dynamic_range.0.
class LogCompress final : public Operation {
 public:
  explicit LogCompress(OperationOptions options = {}) : Operation(std::move(options)) {}
  std::string name() const override { return "LogCompress"; }
  std::vector<std::string> required_params() const override { return {"dynamic_range"}; }
  OpOutput call(TensorFrame input, const ParameterBag& params) const override;
};

/// Clamps to dynamic_range and maps affinely onto normalization_range.
class ClipMapRange final : public Operation {
 public:
  explicit ClipMapRange(OperationOptions options = {}) : Operation(std::move(options)) {}
  std::string name() const override { return "ClipMapRange"; }
  std::vector<std::string> required_params() const override {
    return {"dynamic_range", "normalization_range"};
  }
  OpOutput call(TensorFrame input, const ParameterBag& params) const override;
};

/// Optional parameters: order (default 1), out_shape, fill.
class ScanConvert final : public Operation {
 public:
  explicit ScanConvert(OperationOptions options = {}) : Operation(std::move(options)) {}
  std::string name() const override { return "ScanConvert"; }
  std::vector<std::string> required_params() const override { return {"rho_range", "theta_range"}; }
  OpOutput call(TensorFrame input, const ParameterBag& params) const override;
};

/// Memory-bounded execution of per-pixel operations over pixel chunks.
class PatchedGrid final : public Operation {
 public:
  PatchedGrid(std::vector<OperationPtr> operations, std::size_t num_patches,
              OperationOptions options = {});
  std::string name() const override { return "PatchedGrid"; }
  std::vector<std::string> required_params() const override;
  std::vector<std::string> requirements(const ParameterBag& params) const override;
  std::vector<std::size_t> partition(const ParameterBag& params) const override;
  OpOutput call(TensorFrame input, const ParameterBag& params) const override;

  std::size_t num_patches() const noexcept { return num_patches_; }
  std::span<const OperationPtr> inner() const noexcept { return operations_; }

 private:
  std::vector<OperationPtr> operations_;
  std::size_t num_patches_;
};

/// Names accepted by make_operation, sorted.
std::vector<std::string> known_operations();

/// Builds a leaf operation by name. PatchedGrid is built separately because
/// it nests operations. Unknown names throw ErrorKind::config listing the
/// known operations.
OperationPtr make_operation(const std::string& name, OperationOptions options = {});

/// Demodulate, PatchedGrid(TOFCorrection, PfieldWeighting, DelayAndSum),
/// EnvelopeDetect, Normalize, LogCompress.
Pipeline default_bmode_pipeline(std::size_t num_patches = 100);

/// Same chain without pixel chunking.
Pipeline unpatched_bmode_pipeline();

/// Loads a pipeline description (JSON, see docs/pipeline-config.md).
Pipeline load_pipeline_config(const std::string& path);
Pipeline parse_pipeline_config(const std::string& text);

}  // namespace sonolab
