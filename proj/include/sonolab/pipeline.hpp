#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sonolab/core.hpp"
#include "sonolab/tensor.hpp"

namespace sonolab {

using TensorMap = std::map<std::string, TensorFrame>;

inline constexpr const char* kDefaultKey = "data";

/// Declarative view of an operation.
struct OperationSpec {
  std::string name;
  std::string input_key;
  std::string output_key;
  std::vector<std::string> required_params;
  bool pure = true;
};

struct OperationOptions {
  ParameterBag params;  // static per-operation parameters; they shadow the flowing bag
  std::string input_key = kDefaultKey;
  std::string output_key = kDefaultKey;
  bool retain_input = false;
};

/// Result of one operation: its output tensor plus parameter updates that
/// later operations see (e.g. the sampling rate after decimation).
struct OpOutput {
  TensorFrame data;
  ParameterBag updates;
};

/// Base class for pipeline stages. Implementations must be pure: the output
/// depends only on the input tensor and the parameters passed to call().
class Operation {
 public:
  virtual ~Operation() = default;

  virtual std::string name() const = 0;
  virtual std::vector<std::string> required_params() const = 0;
  virtual std::vector<std::string> provided_params() const { return {}; }
  virtual OpOutput call(TensorFrame input, const ParameterBag& params) const = 0;

  /// Required parameters once the bag is known; extends required_params()
  /// with value-dependent names (e.g. steering_angles for plane waves).
  virtual std::vector<std::string> requirements(const ParameterBag& /*params*/) const {
    return required_params();
  }

  /// Patch boundaries for chunked operations; empty for everything else.
  virtual std::vector<std::size_t> partition(const ParameterBag& /*params*/) const { return {}; }

  const std::string& input_key() const noexcept { return options_.input_key; }
  const std::string& output_key() const noexcept { return options_.output_key; }
  const ParameterBag& static_params() const noexcept { return options_.params; }
  bool retains_input() const noexcept { return options_.retain_input; }

  OperationSpec spec() const;

 protected:
  explicit Operation(OperationOptions options) : options_(std::move(options)) {}

 private:
  OperationOptions options_;
};

using OperationPtr = std::shared_ptr<const Operation>;

struct PlannedStep {
  std::string operation;
  std::map<std::string, std::string> bindings;  // parameter -> "bag" | "static" | "op:<name>"
  std::vector<std::size_t> patch_boundaries;
};

/// Output of validation; reusable across frames as long as the bag keeps the
/// same keys.
struct ExecutionPlan {
  std::string input_key;
  std::string output_key;
  std::vector<PlannedStep> steps;
  bool validated = false;
};

/// Ordered, immutable chain of operations. Holds no state between calls.
class Pipeline {
 public:
  explicit Pipeline(std::vector<OperationPtr> operations, std::string key = kDefaultKey);

  const std::string& key() const noexcept { return key_; }
  const std::string& output_key() const noexcept { return output_key_; }
  std::span<const OperationPtr> operations() const noexcept { return operations_; }
  std::vector<OperationSpec> specs() const;

  /// Throws ErrorKind::parameter naming the operation and parameter when a
  /// required parameter is unbound, ErrorKind::config on broken key chaining.
  ExecutionPlan validate(const ParameterBag& bag) const;

  TensorMap run(TensorMap inputs, const ParameterBag& bag) const;
  TensorMap run(const ExecutionPlan& plan, TensorMap inputs, const ParameterBag& bag) const;

  /// Convenience for single-input pipelines: runs and returns the output tensor.
  TensorFrame operator()(TensorFrame input, const ParameterBag& bag) const;

 private:
  std::vector<OperationPtr> operations_;
  std::string key_;
  std::string output_key_;
};

/// Everything the built-in operations need, derived from probe and scan.
ParameterBag prepare_parameters(const Probe& probe, const Scan& scan);

/// Contiguous ceil-divided partition of n_pixels into num_patches chunks
/// (clamped to n_pixels). Returns num_patches + 1 boundaries.
std::vector<std::size_t> patch_boundaries(std::size_t n_pixels, std::size_t num_patches);

/// Runs per-pixel operations over contiguous pixel chunks of each frame and
/// stitches the (frame, z, x) result.
TensorFrame run_patched(std::span<const OperationPtr> inner_ops, std::size_t num_patches,
                        TensorFrame input, const ParameterBag& bag);

}  // namespace sonolab
