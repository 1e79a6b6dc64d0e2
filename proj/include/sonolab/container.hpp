#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sonolab/core.hpp"
#include "sonolab/tensor.hpp"

namespace sonolab {

// HDF5 container. Layout:
//   /data/raw_data   float32 (frame, tx, el, sample)
//   /data/image      float32 (frame, z, x), log-compressed dB
//   /data/image_sc   float32 (frame, z, x), scan-converted
//   /scan/*          float64 scalars and vectors, grid_shape and n_tx as int64
//   /probe/element_positions  float64 (n_el, 3)
// Every data set carries an "axes" attribute.

inline constexpr const char* kRawDataKey = "data/raw_data";
inline constexpr const char* kImageKey = "data/image";
inline constexpr const char* kImageScKey = "data/image_sc";

/// "raw_data" -> "data/raw_data"; keys that already carry a group pass through.
std::string normalize_key(const std::string& key);

enum class FileMode { read, write };

/// Read handle. The manifest, scan and probe are read at open time; arrays
/// are read on demand.
class UsFile {
 public:
  /// Throws io for missing or remote paths, format for non-containers.
  static UsFile open(const std::string& path);

  const std::string& path() const noexcept { return path_; }
  FileMode mode() const noexcept { return FileMode::read; }

  /// Data set keys, sorted.
  std::vector<std::string> keys() const;
  bool has(const std::string& key) const;
  std::size_t n_frames() const noexcept { return n_frames_; }
  const std::vector<std::size_t>& shape(const std::string& key) const;

  /// Reads the requested frames (all when indices is empty) as doubles.
  RealTensor load_data(const std::string& key,
                       const std::optional<std::vector<std::size_t>>& indices = std::nullopt) const;

  const Scan& scan() const noexcept { return scan_; }
  const Probe& probe() const noexcept { return probe_; }

  /// Every data set with dtype and shape, then scan and probe values, sorted by key.
  std::string summary() const;

 private:
  struct Entry {
    std::vector<std::size_t> shape;
    std::vector<Axis> axes;
  };

  std::string path_;
  std::map<std::string, Entry> manifest_;
  std::size_t n_frames_ = 0;
  Scan scan_;
  Probe probe_;
};

/// Writes probe, scan and data sets. Keys may be given with or without the
/// "data/" prefix. Throws schema on shape mismatch and io when the file
/// exists and overwrite is false.
UsFile write_file(const std::string& path, const Probe& probe, const Scan& scan,
                  const std::map<std::string, RealTensor>& datasets, bool overwrite = false);

struct LoadedFile {
  RealTensor data;
  Scan scan;
  Probe probe;
};

/// Loads one data set with its scan, applying scan overrides by field name
/// (sound_speed, xlims, zlims, grid_shape, ...).
LoadedFile load_file(const std::string& path, const std::string& data_type,
                     const ParameterBag& scan_overrides = {});

/// Applies overrides to a scan and validates the result.
Scan apply_scan_overrides(Scan scan, const ParameterBag& overrides);

}  // namespace sonolab
