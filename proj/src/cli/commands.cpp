#include "sonolab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sonolab/agent.hpp"
#include "sonolab/container.hpp"
#include "sonolab/dataset.hpp"
#include "sonolab/operations.hpp"
#include "sonolab/png_io.hpp"
#include "sonolab/sim.hpp"

namespace sonolab::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io:
      return 1;
    case ErrorKind::format:
    case ErrorKind::schema:
    case ErrorKind::key:
    case ErrorKind::config:
      return 2;
    case ErrorKind::parameter:
    case ErrorKind::invalid_scan:
    case ErrorKind::bounds:
    case ErrorKind::degenerate_input:
      return 3;
  }
  return 3;
}

namespace {

json bag_to_json(const ParameterBag& bag) {
  json out = json::object();
  for (const auto& [name, value] : bag) {
    std::visit(
        [&](const auto& v) {
          using V = std::decay_t<decltype(v)>;
          if constexpr (std::is_same_v<V, ParameterBag::Pair>) {
            out[name] = json::array({v.first, v.second});
          } else {
            out[name] = v;
          }
        },
        value);
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::io, "cannot write '" + path + "'");
  f << text;
  if (!f) throw Error(ErrorKind::io, "cannot write '" + path + "'");
}

RealTensor frame_plane(const RealTensor& t, std::size_t frame) {
  if (t.rank() != 3) throw Error(ErrorKind::schema, "expected a (frame, z, x) image, got " + shape_to_string(t.shape()));
  const std::size_t index[] = {frame};
  RealTensor one = t.take(index);
  const std::size_t h = one.extent(1), w = one.extent(2);
  return std::move(one).reshaped({Axis::z, Axis::x}, {h, w});
}

std::pair<double, double> range_from(const std::vector<double>& v, std::pair<double, double> fallback) {
  if (v.empty()) return fallback;
  if (!(v[0] < v[1])) throw Error(ErrorKind::parameter, "dynamic range must satisfy LO < HI");
  return {v[0], v[1]};
}

struct BeamformResult {
  RealTensor image;  // (z, x) in dB
  ParameterBag bag;
  std::vector<std::string> operations;
};

BeamformResult beamform_frame(const UsFile& file, std::size_t frame, const ParameterBag& overrides,
                              const std::optional<std::string>& pipeline_path) {
  if (!file.has(kRawDataKey)) {
    throw Error(ErrorKind::key, "'" + file.path() + "' has no data/raw_data");
  }
  const std::vector<std::size_t> index{frame};
  RealTensor rf = file.load_data(kRawDataKey, index);
  ParameterBag bag = merge_parameters(prepare_parameters(file.probe(), file.scan()), overrides);
  Pipeline pipeline = pipeline_path ? load_pipeline_config(*pipeline_path) : default_bmode_pipeline(100);
  TensorFrame result = pipeline(TensorFrame(std::move(rf)), bag);
  if (is_complex(result)) throw Error(ErrorKind::config, "pipeline output must be real-valued");
  BeamformResult out{frame_plane(std::get<RealTensor>(result), 0), std::move(bag), {}};
  for (const auto& spec : pipeline.specs()) out.operations.push_back(spec.name);
  return out;
}

// ---- commands ----

int cmd_info(const std::string& path, std::ostream& out) {
  out << UsFile::open(path).summary();
  return 0;
}

struct BeamformArgs {
  std::string input;
  std::string output;
  std::size_t frame = 0;
  std::optional<double> sound_speed;
  std::optional<double> f_number;
  std::vector<double> dynamic_range;
  std::optional<std::string> pipeline;
};

int cmd_beamform(const BeamformArgs& args, std::ostream& out) {
  const UsFile file = UsFile::open(args.input);
  ParameterBag overrides;
  if (args.sound_speed) {
    if (!(*args.sound_speed > 0.0)) throw Error(ErrorKind::parameter, "--sound-speed must be > 0");
    overrides.set("sound_speed", *args.sound_speed);
  }
  if (args.f_number) {
    if (!(*args.f_number > 0.0)) throw Error(ErrorKind::parameter, "--f-number must be > 0");
    overrides.set("f_number", *args.f_number);
  }
  const auto range = range_from(args.dynamic_range, {-60.0, 0.0});
  overrides.set("dynamic_range", ParameterBag::Pair{range.first, range.second});

  BeamformResult result = beamform_frame(file, args.frame, overrides, args.pipeline);
  write_png(args.output, to_gray8(result.image, range));

  json sidecar;
  sidecar["input"] = args.input;
  sidecar["frame"] = args.frame;
  sidecar["operations"] = result.operations;
  sidecar["parameters"] = bag_to_json(result.bag);
  write_text_file(args.output + ".json", sidecar.dump(2) + "\n");
  out << "wrote " << args.output << " (" << result.image.extent(0) << "x" << result.image.extent(1) << ")\n";
  return 0;
}

int cmd_simulate(const std::string& phantom_path, const std::string& output, bool overwrite, std::ostream& out) {
  const sim::SimulationConfig cfg = sim::load_phantom_config(phantom_path);
  std::size_t n_samples = cfg.n_samples;
  if (n_samples == 0) {
    n_samples = std::max(sim::samples_for_grid(cfg.probe, cfg.scan, cfg.pulse),
                         sim::required_samples(cfg.phantom, cfg.probe, cfg.scan, cfg.pulse));
  }
  RealTensor rf = sim::simulate_rf(cfg.phantom, cfg.probe, cfg.scan, cfg.pulse, n_samples, cfg.n_frames);
  const std::string shape = shape_to_string(rf.shape());
  std::map<std::string, RealTensor> datasets;
  datasets.emplace(kRawDataKey, std::move(rf));
  write_file(output, cfg.probe, cfg.scan, datasets, overwrite);
  out << "wrote " << output << " raw_data " << shape << "\n";
  return 0;
}

struct AgentArgs {
  std::string input;
  std::string prefix;
  std::optional<std::size_t> n_actions;
  std::uint64_t seed = 0;
  std::size_t n_particles = 32;
  std::vector<double> dynamic_range;
};

int cmd_agent(const AgentArgs& args, std::ostream& out) {
  const UsFile file = UsFile::open(args.input);
  const auto range = range_from(args.dynamic_range, {-60.0, 0.0});
  RealTensor image;
  if (file.has(kImageKey)) {
    image = frame_plane(file.load_data(kImageKey, std::vector<std::size_t>{0}), 0);
  } else {
    ParameterBag overrides;
    overrides.set("dynamic_range", ParameterBag::Pair{range.first, range.second});
    image = beamform_frame(file, 0, overrides, std::nullopt).image;
  }
  const std::size_t height = image.extent(0);
  const std::size_t width = image.extent(1);

  // Column spread of the image stands in for posterior uncertainty.
  std::vector<double> profile(width, 0.0);
  for (std::size_t c = 0; c < width; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < height; ++r) mean += image(r, c);
    mean /= static_cast<double>(height);
    double ss = 0.0;
    for (std::size_t r = 0; r < height; ++r) ss += (image(r, c) - mean) * (image(r, c) - mean);
    profile[c] = height > 1 ? std::sqrt(ss / static_cast<double>(height - 1)) : 0.0;
  }

  const std::size_t n_actions = args.n_actions.value_or(agent::default_n_actions(width));
  const RealTensor particles = agent::toy_particles(image, args.n_particles, profile, args.seed);
  const agent::ActionSet actions = agent::gem_select(particles, n_actions, width).front();
  const agent::LineMask mask = agent::make_line_mask(actions, height, width);
  const RealTensor masked = agent::apply_mask(image, mask, range.first);

  const Gray8Image full_png = to_gray8(image, range);
  const Gray8Image masked_png = to_gray8(masked, range);
  write_png(args.prefix + "_full.png", full_png);
  write_png(args.prefix + "_masked.png", masked_png);
  write_png(args.prefix + "_side_by_side.png", side_by_side({full_png, masked_png}));

  std::string lines;
  for (std::size_t i = 0; i < actions.selected_lines.size(); ++i) {
    lines += (i ? " " : "") + std::to_string(actions.selected_lines[i]);
  }
  write_text_file(args.prefix + "_lines.txt", lines + "\n");
  out << "selected " << actions.n_actions << " of " << actions.n_possible_actions << " lines: " << lines << "\n";
  return 0;
}

int cmd_dataset_stats(const std::string& root, const std::string& key, std::ostream& out) {
  const auto files = data::find_container_files(root);
  if (files.empty()) throw Error(ErrorKind::io, "no container files under '" + root + "'");
  double g_min = std::numeric_limits<double>::infinity();
  double g_max = -g_min;
  double g_sum = 0.0;
  std::size_t g_count = 0, g_frames = 0;
  std::ostringstream table;
  table << "file,frames,min,max,mean\n";
  for (const auto& path : files) {
    const UsFile file = UsFile::open(path);
    const RealTensor t = file.load_data(key);
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, sum = 0.0;
    for (double v : t.values()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      sum += v;
    }
    table << fs::relative(path, root).generic_string() << ',' << file.n_frames() << ',' << format_number(lo) << ','
        << format_number(hi) << ',' << format_number(sum / static_cast<double>(t.size())) << '\n';
    g_min = std::min(g_min, lo);
    g_max = std::max(g_max, hi);
    g_sum += sum;
    g_count += t.size();
    g_frames += file.n_frames();
  }
  table << "# all," << g_frames << ',' << format_number(g_min) << ',' << format_number(g_max) << ','
      << format_number(g_sum / static_cast<double>(g_count)) << '\n';
  out << table.str();
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ultrasound reconstruction toolkit", "sonolab"};
  app.require_subcommand(1);

  std::string info_path;
  auto* info = app.add_subcommand("info", "Print a container summary");
  info->add_option("path", info_path, "Container file")->required();

  BeamformArgs bf;
  auto* beamform = app.add_subcommand("beamform", "Reconstruct one frame to a B-mode PNG");
  beamform->add_option("input", bf.input, "Container with data/raw_data")->required();
  beamform->add_option("-o,--output", bf.output, "Output PNG")->required();
  beamform->add_option("--frame", bf.frame, "Frame index");
  beamform->add_option("--sound-speed", bf.sound_speed, "Sound speed override (m/s)");
  beamform->add_option("--f-number", bf.f_number, "Receive f-number");
  beamform->add_option("--dynamic-range", bf.dynamic_range, "Display range in dB (LO HI)")->expected(2);
  beamform->add_option("--pipeline", bf.pipeline, "Pipeline config (JSON)");

  std::string phantom, sim_output;
  bool overwrite = false;
  auto* simulate = app.add_subcommand("simulate", "Simulate RF data for a phantom");
  simulate->add_option("--phantom", phantom, "Phantom config (JSON)")->required();
  simulate->add_option("-o,--output", sim_output, "Output container")->required();
  simulate->add_flag("--overwrite", overwrite, "Replace an existing output file");

  AgentArgs ag;
  auto* agent_cmd = app.add_subcommand("agent", "Select scan lines by greedy entropy");
  agent_cmd->add_option("input", ag.input, "Container with data/image or data/raw_data")->required();
  agent_cmd->add_option("-o,--output", ag.prefix, "Output prefix")->required();
  agent_cmd->add_option("--n-actions", ag.n_actions, "Lines to select (default width // 8)");
  agent_cmd->add_option("--seed", ag.seed, "Particle seed");
  agent_cmd->add_option("--particles", ag.n_particles, "Particles in the toy ensemble");
  agent_cmd->add_option("--dynamic-range", ag.dynamic_range, "Display range in dB (LO HI)")->expected(2);

  std::string ds_root, ds_key;
  auto* stats = app.add_subcommand("dataset-stats", "Per-file statistics of one data set key");
  stats->add_option("root", ds_root, "Dataset root directory")->required();
  stats->add_option("--key", ds_key, "Data set key")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_code(ErrorKind::parameter);
  }

  try {
    if (*info) return cmd_info(info_path, out);
    if (*beamform) return cmd_beamform(bf, out);
    if (*simulate) return cmd_simulate(phantom, sim_output, overwrite, out);
    if (*agent_cmd) return cmd_agent(ag, out);
    if (*stats) return cmd_dataset_stats(ds_root, ds_key, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace sonolab::cli
