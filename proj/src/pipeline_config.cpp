#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "sonolab/operations.hpp"

namespace sonolab {

namespace {

using json = nlohmann::json;

[[noreturn]] void config_error(const std::string& msg) {
  throw Error(ErrorKind::config, "pipeline config: " + msg);
}

ParameterBag::Value to_value(const std::string& key, const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) return v.get<std::string>();
  if (v.is_array()) {
    std::vector<double> out;
    for (const auto& item : v) {
      if (!item.is_number()) config_error("parameter '" + key + "' must be a number array");
      out.push_back(item.get<double>());
    }
    return out;
  }
  config_error("parameter '" + key + "' has an unsupported type");
}

OperationPtr parse_operation(const json& node) {
  static const std::set<std::string> kFields{"name",       "params",       "input_key",
                                             "output_key", "retain_input", "num_patches",
                                             "operations"};
  if (!node.is_object()) config_error("each operation must be an object");
  for (const auto& [field, _] : node.items()) {
    if (!kFields.count(field)) config_error("unknown field '" + field + "'");
  }
  if (!node.contains("name") || !node["name"].is_string()) {
    config_error("operation without a 'name'");
  }
  const std::string name = node["name"].get<std::string>();

  OperationOptions options;
  if (node.contains("params")) {
    if (!node["params"].is_object()) config_error("'params' of " + name + " must be an object");
    for (const auto& [k, v] : node["params"].items()) options.params.set(k, to_value(k, v));
  }
  if (node.contains("input_key")) options.input_key = node["input_key"].get<std::string>();
  if (node.contains("output_key")) options.output_key = node["output_key"].get<std::string>();
  if (node.contains("retain_input")) options.retain_input = node["retain_input"].get<bool>();

  if (name == "PatchedGrid") {
    if (!node.contains("operations") || !node["operations"].is_array()) {
      config_error("PatchedGrid needs an 'operations' array");
    }
    std::vector<OperationPtr> inner;
    for (const auto& child : node["operations"]) inner.push_back(parse_operation(child));
    const long patches = node.value("num_patches", 1L);
    if (patches < 1) config_error("num_patches must be >= 1");
    return std::make_shared<PatchedGrid>(std::move(inner), static_cast<std::size_t>(patches),
                                         std::move(options));
  }
  if (node.contains("operations") || node.contains("num_patches")) {
    config_error("only PatchedGrid accepts 'operations' and 'num_patches'");
  }
  return make_operation(name, std::move(options));
}

}  // namespace

Pipeline parse_pipeline_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    config_error(e.what());
  }
  if (!root.is_object() || !root.contains("operations") || !root["operations"].is_array()) {
    config_error("expected an object with an 'operations' array");
  }
  std::vector<OperationPtr> ops;
  try {
    for (const auto& node : root["operations"]) ops.push_back(parse_operation(node));
  } catch (const json::exception& e) {
    config_error(e.what());
  }
  return Pipeline(std::move(ops), root.value("key", std::string(kDefaultKey)));
}

Pipeline load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, "cannot open pipeline config '" + path + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_pipeline_config(buffer.str());
}

}  // namespace sonolab
