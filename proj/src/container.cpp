#include "sonolab/container.hpp"

#include <H5Cpp.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <sstream>

namespace sonolab {

namespace fs = std::filesystem;

namespace {

// The serial HDF5 build is not thread-safe.
std::recursive_mutex& h5_mutex() {
  static std::recursive_mutex m;
  return m;
}

struct QuietHdf5 {
  QuietHdf5() { H5::Exception::dontPrint(); }
};

std::unique_lock<std::recursive_mutex> lock_hdf5() {
  static QuietHdf5 quiet;
  return std::unique_lock(h5_mutex());
}

struct KeyRule {
  std::vector<Axis> axes;
};

const std::map<std::string, KeyRule>& key_rules() {
  static const std::map<std::string, KeyRule> rules{
      {kRawDataKey, {{Axis::frame, Axis::tx, Axis::el, Axis::sample}}},
      {kImageKey, {{Axis::frame, Axis::z, Axis::x}}},
      {kImageScKey, {{Axis::frame, Axis::z, Axis::x}}},
  };
  return rules;
}

void reject_remote(const std::string& path) {
  if (path.find("://") != std::string::npos) {
    throw Error(ErrorKind::io, "remote paths are not supported: '" + path + "'");
  }
}

std::string format_list(const std::vector<double>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += format_number(values[i]);
  }
  return out + "]";
}

// ---- writing ----

hid_t untimed_group_plist() {
  hid_t plist = H5Pcreate(H5P_GROUP_CREATE);
  H5Pset_obj_track_times(plist, false);
  return plist;
}

H5::Group make_group(H5::H5File& file, const char* name) {
  hid_t plist = untimed_group_plist();
  hid_t id = H5Gcreate2(file.getId(), name, H5P_DEFAULT, plist, H5P_DEFAULT);
  H5Pclose(plist);
  if (id < 0) throw Error(ErrorKind::io, std::string("cannot create group ") + name);
  H5::Group group(id);
  H5Gclose(id);
  return group;
}

H5::DSetCreatPropList untimed_dataset_plist() {
  H5::DSetCreatPropList plist;
  H5Pset_obj_track_times(plist.getId(), false);
  return plist;
}

H5::DataSpace make_space(const std::vector<std::size_t>& shape) {
  if (shape.empty()) return H5::DataSpace(H5S_SCALAR);
  std::vector<hsize_t> dims(shape.begin(), shape.end());
  return H5::DataSpace(static_cast<int>(dims.size()), dims.data());
}

void write_text_attribute(H5::DataSet& ds, const char* name, const std::string& text) {
  H5::StrType type(H5::PredType::C_S1, H5T_VARIABLE);
  H5::Attribute attr = ds.createAttribute(name, type, H5::DataSpace(H5S_SCALAR));
  attr.write(type, text);
}

void write_doubles(H5::Group& group, const char* name, const std::vector<double>& values,
                   std::vector<std::size_t> shape) {
  if (values.empty()) return;
  H5::DataSet ds = group.createDataSet(name, H5::PredType::IEEE_F64LE, make_space(shape),
                                       untimed_dataset_plist());
  ds.write(values.data(), H5::PredType::NATIVE_DOUBLE);
}

void write_scalar(H5::Group& group, const char* name, double value) {
  write_doubles(group, name, {value}, {});
}

void write_int64s(H5::Group& group, const char* name, const std::vector<std::int64_t>& values,
                  std::vector<std::size_t> shape) {
  H5::DataSet ds = group.createDataSet(name, H5::PredType::STD_I64LE, make_space(shape),
                                       untimed_dataset_plist());
  ds.write(values.data(), H5::PredType::NATIVE_INT64);
}

void write_text(H5::Group& group, const char* name, const std::string& text) {
  H5::StrType type(H5::PredType::C_S1, H5T_VARIABLE);
  H5::DataSet ds =
      group.createDataSet(name, type, H5::DataSpace(H5S_SCALAR), untimed_dataset_plist());
  ds.write(text, type);
}

std::vector<double> flatten_points(const std::vector<Vec3>& points) {
  std::vector<double> out;
  out.reserve(points.size() * 3);
  for (const Vec3& p : points) out.insert(out.end(), {p.x, p.y, p.z});
  return out;
}

void write_tensor(H5::Group& group, const std::string& name, const RealTensor& t) {
  std::vector<float> buf(t.size());
  std::transform(t.values().begin(), t.values().end(), buf.begin(),
                 [](double v) { return static_cast<float>(v); });
  H5::DataSet ds = group.createDataSet(name, H5::PredType::IEEE_F32LE, make_space(t.shape()),
                                       untimed_dataset_plist());
  ds.write(buf.data(), H5::PredType::NATIVE_FLOAT);
  write_text_attribute(ds, "axes", axes_to_string(t.axes()));
}

void check_datasets(const Probe& probe, const Scan& scan,
                    const std::map<std::string, const RealTensor*>& datasets) {
  if (datasets.empty()) throw Error(ErrorKind::schema, "no data sets to write");
  std::optional<std::size_t> frames;
  for (const auto& [key, tensor] : datasets) {
    auto rule = key_rules().find(key);
    if (rule == key_rules().end()) {
      throw Error(ErrorKind::schema, "unsupported data set key '" + key +
                                         "' (expected data/raw_data, data/image or data/image_sc)");
    }
    if (tensor->axes() != rule->second.axes) {
      throw Error(ErrorKind::schema, key + " must have axes (" + axes_to_string(rule->second.axes) +
                                         "), got (" + axes_to_string(tensor->axes()) + ")");
    }
    const auto& shape = tensor->shape();
    if (key == kRawDataKey) {
      if (shape[1] != scan.n_tx()) {
        throw Error(ErrorKind::schema, key + " tx axis is " + std::to_string(shape[1]) +
                                           " but the scan has " + std::to_string(scan.n_tx()) +
                                           " transmits");
      }
      if (shape[2] != probe.n_elements()) {
        throw Error(ErrorKind::schema, key + " el axis is " + std::to_string(shape[2]) +
                                           " but the probe has " +
                                           std::to_string(probe.n_elements()) + " elements");
      }
    }
    if (key == kImageKey && (shape[1] != scan.grid_shape[0] || shape[2] != scan.grid_shape[1])) {
      throw Error(ErrorKind::schema, key + " shape " + shape_to_string(shape) +
                                         " does not match the scan grid");
    }
    if (frames && *frames != shape[0]) {
      throw Error(ErrorKind::schema, "frame counts differ between data sets");
    }
    frames = shape[0];
  }
}

// ---- reading ----

std::vector<std::size_t> dataset_shape(const H5::DataSet& ds) {
  H5::DataSpace space = ds.getSpace();
  const int rank = space.getSimpleExtentNdims();
  std::vector<hsize_t> dims(static_cast<std::size_t>(rank));
  if (rank > 0) space.getSimpleExtentDims(dims.data());
  return {dims.begin(), dims.end()};
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return n;
}

std::vector<double> read_doubles(const H5::Group& group, const std::string& name) {
  H5::DataSet ds = group.openDataSet(name);
  std::vector<double> out(element_count(dataset_shape(ds)));
  if (!out.empty()) ds.read(out.data(), H5::PredType::NATIVE_DOUBLE);
  return out;
}

double read_scalar(const H5::Group& group, const std::string& name) {
  const auto v = read_doubles(group, name);
  if (v.size() != 1) throw Error(ErrorKind::format, "scan/" + name + " must be a scalar");
  return v[0];
}

std::pair<double, double> read_pair(const H5::Group& group, const std::string& name) {
  const auto v = read_doubles(group, name);
  if (v.size() != 2) throw Error(ErrorKind::format, name + " must hold two values");
  return {v[0], v[1]};
}

std::string read_text(const H5::Group& group, const std::string& name) {
  H5::DataSet ds = group.openDataSet(name);
  std::string out;
  ds.read(out, ds.getStrType());
  return out;
}

std::vector<Vec3> read_points(const H5::Group& group, const std::string& name) {
  const auto flat = read_doubles(group, name);
  if (flat.size() % 3 != 0) throw Error(ErrorKind::format, name + " must have shape (n, 3)");
  std::vector<Vec3> out;
  for (std::size_t i = 0; i < flat.size(); i += 3) out.push_back({flat[i], flat[i + 1], flat[i + 2]});
  return out;
}

void require(const H5::Group& group, const std::string& prefix, const std::string& name) {
  if (!group.nameExists(name)) {
    throw Error(ErrorKind::format, "container is missing " + prefix + "/" + name);
  }
}

Scan read_scan(const H5::Group& g) {
  for (const char* name : {"sound_speed", "center_frequency", "sampling_frequency",
                           "demodulation_frequency", "transmit_type", "xlims", "zlims",
                           "grid_shape"}) {
    require(g, "scan", name);
  }
  Scan scan;
  scan.sound_speed = read_scalar(g, "sound_speed");
  scan.center_frequency = read_scalar(g, "center_frequency");
  scan.sampling_frequency = read_scalar(g, "sampling_frequency");
  scan.demodulation_frequency = read_scalar(g, "demodulation_frequency");
  scan.transmit_type = transmit_type_from_string(read_text(g, "transmit_type"));
  scan.steering_angles = g.nameExists("steering_angles") ? read_doubles(g, "steering_angles")
                                                         : std::vector<double>{};
  scan.virtual_sources =
      g.nameExists("virtual_sources") ? read_points(g, "virtual_sources") : std::vector<Vec3>{};
  scan.initial_times =
      g.nameExists("initial_times") ? read_doubles(g, "initial_times") : std::vector<double>{};
  scan.xlims = read_pair(g, "xlims");
  scan.zlims = read_pair(g, "zlims");
  H5::DataSet ds = g.openDataSet("grid_shape");
  if (element_count(dataset_shape(ds)) != 2) throw Error(ErrorKind::format, "grid_shape must hold two values");
  std::int64_t shape[2];
  ds.read(shape, H5::PredType::NATIVE_INT64);
  if (shape[0] < 1 || shape[1] < 1) throw Error(ErrorKind::format, "grid_shape must be positive");
  scan.grid_shape = {static_cast<std::size_t>(shape[0]), static_cast<std::size_t>(shape[1])};
  return scan;
}

Probe read_probe(const H5::Group& g) {
  require(g, "probe", "element_positions");
  Probe probe;
  probe.element_positions = read_points(g, "element_positions");
  probe.pitch = g.nameExists("pitch") ? read_scalar(g, "pitch") : 0.0;
  probe.name = g.nameExists("name") ? read_text(g, "name") : std::string{};
  return probe;
}

std::string dataset_text_attribute(const H5::DataSet& ds, const char* name) {
  if (!ds.attrExists(name)) return {};
  H5::Attribute attr = ds.openAttribute(name);
  std::string out;
  attr.read(attr.getStrType(), out);
  return out;
}

}  // namespace

std::string normalize_key(const std::string& key) {
  const std::string k = key.starts_with('/') ? key.substr(1) : key;
  if (k.find('/') != std::string::npos) return k;
  return "data/" + k;
}

UsFile UsFile::open(const std::string& path) {
  reject_remote(path);
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw Error(ErrorKind::io, "no such file: '" + path + "'");
  auto guard = lock_hdf5();
  UsFile file;
  file.path_ = path;
  try {
    if (!H5::H5File::isHdf5(path)) {
      throw Error(ErrorKind::format, "'" + path + "' is not an HDF5 container");
    }
    H5::H5File h5(path, H5F_ACC_RDONLY);
    for (const char* group : {"scan", "probe", "data"}) {
      if (!h5.nameExists(group)) {
        throw Error(ErrorKind::format, "'" + path + "' has no '" + group + "' group");
      }
    }
    file.scan_ = read_scan(h5.openGroup("scan"));
    file.probe_ = read_probe(h5.openGroup("probe"));

    H5::Group data = h5.openGroup("data");
    std::optional<std::size_t> frames;
    for (hsize_t i = 0; i < data.getNumObjs(); ++i) {
      const std::string name = data.getObjnameByIdx(i);
      if (data.childObjType(name) != H5O_TYPE_DATASET) continue;
      H5::DataSet ds = data.openDataSet(name);
      Entry entry;
      entry.shape = dataset_shape(ds);
      if (entry.shape.empty()) throw Error(ErrorKind::format, "data/" + name + " must not be scalar");
      const std::string axes = dataset_text_attribute(ds, "axes");
      if (!axes.empty()) entry.axes = axes_from_string(axes);
      if (entry.axes.size() != entry.shape.size()) {
        throw Error(ErrorKind::format, "data/" + name + " has a missing or inconsistent axes attribute");
      }
      if (frames && *frames != entry.shape[0]) {
        throw Error(ErrorKind::format, "frame counts differ between data sets in '" + path + "'");
      }
      frames = entry.shape[0];
      file.manifest_.emplace("data/" + name, std::move(entry));
    }
    if (file.manifest_.empty()) throw Error(ErrorKind::format, "'" + path + "' holds no data sets");
    file.n_frames_ = *frames;
  } catch (const H5::Exception& e) {
    throw Error(ErrorKind::format, "cannot read '" + path + "': " + e.getDetailMsg());
  }
  return file;
}

std::vector<std::string> UsFile::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : manifest_) out.push_back(k);
  return out;
}

bool UsFile::has(const std::string& key) const { return manifest_.count(normalize_key(key)) != 0; }

const std::vector<std::size_t>& UsFile::shape(const std::string& key) const {
  auto it = manifest_.find(normalize_key(key));
  if (it == manifest_.end()) throw Error(ErrorKind::key, "no data set '" + key + "' in '" + path_ + "'");
  return it->second.shape;
}

RealTensor UsFile::load_data(const std::string& key,
                             const std::optional<std::vector<std::size_t>>& indices) const {
  const std::string full = normalize_key(key);
  auto it = manifest_.find(full);
  if (it == manifest_.end()) throw Error(ErrorKind::key, "no data set '" + key + "' in '" + path_ + "'");
  const Entry& entry = it->second;

  std::vector<std::size_t> frames;
  if (indices) {
    frames = *indices;
    for (std::size_t i : frames) {
      if (i >= n_frames_) {
        throw Error(ErrorKind::bounds, "frame index " + std::to_string(i) + " out of range [0, " +
                                           std::to_string(n_frames_) + ")");
      }
    }
    if (frames.empty()) throw Error(ErrorKind::bounds, "empty frame selection");
  }

  std::vector<std::size_t> shape = entry.shape;
  const std::size_t frame_size = element_count(shape) / shape[0];
  std::vector<float> buf;

  auto guard = lock_hdf5();
  try {
    H5::H5File h5(path_, H5F_ACC_RDONLY);
    H5::DataSet ds = h5.openDataSet(full);
    if (!indices) {
      buf.resize(element_count(shape));
      ds.read(buf.data(), H5::PredType::NATIVE_FLOAT);
    } else {
      buf.resize(frames.size() * frame_size);
      H5::DataSpace file_space = ds.getSpace();
      std::vector<hsize_t> count(shape.begin(), shape.end());
      count[0] = 1;
      std::vector<hsize_t> start(shape.size(), 0);
      H5::DataSpace mem_space(static_cast<int>(count.size()), count.data());
      for (std::size_t j = 0; j < frames.size(); ++j) {
        start[0] = frames[j];
        file_space.selectHyperslab(H5S_SELECT_SET, count.data(), start.data());
        ds.read(buf.data() + j * frame_size, H5::PredType::NATIVE_FLOAT, mem_space, file_space);
      }
      shape[0] = frames.size();
    }
  } catch (const H5::Exception& e) {
    throw Error(ErrorKind::format, "cannot read " + full + " from '" + path_ + "': " + e.getDetailMsg());
  }
  return RealTensor(entry.axes, std::move(shape), std::vector<double>(buf.begin(), buf.end()));
}

std::string UsFile::summary() const {
  std::map<std::string, std::string> lines;
  for (const auto& [key, entry] : manifest_) {
    lines[key] = "float32 " + shape_to_string(entry.shape) + " [" + axes_to_string(entry.axes) + "]";
  }
  const Scan& s = scan_;
  lines["scan/sound_speed"] = format_number(s.sound_speed);
  lines["scan/center_frequency"] = format_number(s.center_frequency);
  lines["scan/sampling_frequency"] = format_number(s.sampling_frequency);
  lines["scan/demodulation_frequency"] = format_number(s.demodulation_frequency);
  lines["scan/transmit_type"] = to_string(s.transmit_type);
  lines["scan/n_tx"] = std::to_string(s.n_tx());
  if (!s.steering_angles.empty()) lines["scan/steering_angles"] = format_list(s.steering_angles);
  if (!s.virtual_sources.empty()) lines["scan/virtual_sources"] = format_list(flatten_points(s.virtual_sources));
  if (!s.initial_times.empty()) lines["scan/initial_times"] = format_list(s.initial_times);
  lines["scan/xlims"] = format_list({s.xlims.first, s.xlims.second});
  lines["scan/zlims"] = format_list({s.zlims.first, s.zlims.second});
  lines["scan/grid_shape"] =
      "(" + std::to_string(s.grid_shape[0]) + ", " + std::to_string(s.grid_shape[1]) + ")";
  lines["probe/element_positions"] =
      "float64 " + shape_to_string(std::vector<std::size_t>{probe_.n_elements(), 3});
  lines["probe/pitch"] = format_number(probe_.pitch);
  lines["probe/name"] = probe_.name;

  std::ostringstream out;
  out << "frames: " << n_frames_ << '\n';
  for (const auto& [k, v] : lines) out << k << ": " << v << '\n';
  return out.str();
}

UsFile write_file(const std::string& path, const Probe& probe, const Scan& scan,
                  const std::map<std::string, RealTensor>& datasets, bool overwrite) {
  reject_remote(path);
  probe.validate();
  scan.validate();
  std::map<std::string, const RealTensor*> normalized;
  for (const auto& [key, tensor] : datasets) {
    if (!normalized.emplace(normalize_key(key), &tensor).second) {
      throw Error(ErrorKind::schema, "data set '" + normalize_key(key) + "' given twice");
    }
  }
  check_datasets(probe, scan, normalized);

  std::error_code ec;
  if (fs::exists(path, ec) && !overwrite) {
    throw Error(ErrorKind::io, "refusing to overwrite existing file '" + path + "'");
  }
  const std::string tmp = path + ".partial";
  {
    auto guard = lock_hdf5();
    try {
      H5::H5File h5(tmp, H5F_ACC_TRUNC);
      H5::Group data = make_group(h5, "data");
      for (const auto& [key, tensor] : normalized) write_tensor(data, key.substr(5), *tensor);

      H5::Group sg = make_group(h5, "scan");
      write_scalar(sg, "sound_speed", scan.sound_speed);
      write_scalar(sg, "center_frequency", scan.center_frequency);
      write_scalar(sg, "sampling_frequency", scan.sampling_frequency);
      write_scalar(sg, "demodulation_frequency", scan.demodulation_frequency);
      write_text(sg, "transmit_type", to_string(scan.transmit_type));
      write_doubles(sg, "steering_angles", scan.steering_angles, {scan.steering_angles.size()});
      write_doubles(sg, "virtual_sources", flatten_points(scan.virtual_sources),
                    {scan.virtual_sources.size(), 3});
      write_doubles(sg, "initial_times", scan.initial_times, {scan.initial_times.size()});
      write_doubles(sg, "xlims", {scan.xlims.first, scan.xlims.second}, {2});
      write_doubles(sg, "zlims", {scan.zlims.first, scan.zlims.second}, {2});
      write_int64s(sg, "grid_shape",
                   {static_cast<std::int64_t>(scan.grid_shape[0]),
                    static_cast<std::int64_t>(scan.grid_shape[1])},
                   {2});
      write_int64s(sg, "n_tx", {static_cast<std::int64_t>(scan.n_tx())}, {});

      H5::Group pg = make_group(h5, "probe");
      write_doubles(pg, "element_positions", flatten_points(probe.element_positions),
                    {probe.n_elements(), 3});
      write_scalar(pg, "pitch", probe.pitch);
      write_text(pg, "name", probe.name);
    } catch (const H5::Exception& e) {
      fs::remove(tmp, ec);
      throw Error(ErrorKind::io, "cannot write '" + path + "': " + e.getDetailMsg());
    }
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::io, "cannot write '" + path + "'");
  }
  return UsFile::open(path);
}

Scan apply_scan_overrides(Scan scan, const ParameterBag& overrides) {
  for (const auto& [name, _] : overrides) {
    if (name == "sound_speed") {
      scan.sound_speed = overrides.scalar(name);
    } else if (name == "center_frequency") {
      scan.center_frequency = overrides.scalar(name);
    } else if (name == "sampling_frequency") {
      scan.sampling_frequency = overrides.scalar(name);
    } else if (name == "demodulation_frequency") {
      scan.demodulation_frequency = overrides.scalar(name);
    } else if (name == "xlims") {
      scan.xlims = overrides.pair(name);
    } else if (name == "zlims") {
      scan.zlims = overrides.pair(name);
    } else if (name == "grid_shape") {
      const auto [nz, nx] = overrides.pair(name);
      if (!(nz >= 1 && nx >= 1)) throw Error(ErrorKind::parameter, "grid_shape must be positive");
      scan.grid_shape = {static_cast<std::size_t>(nz), static_cast<std::size_t>(nx)};
    } else if (name == "steering_angles") {
      scan.steering_angles = overrides.array(name);
    } else if (name == "initial_times") {
      scan.initial_times = overrides.array(name);
    } else {
      throw Error(ErrorKind::parameter, "unknown scan override '" + name + "'");
    }
  }
  scan.validate();
  return scan;
}

LoadedFile load_file(const std::string& path, const std::string& data_type,
                     const ParameterBag& scan_overrides) {
  UsFile file = UsFile::open(path);
  Scan scan = apply_scan_overrides(file.scan(), scan_overrides);
  RealTensor data = file.load_data(data_type);
  return {std::move(data), std::move(scan), file.probe()};
}

}  // namespace sonolab
