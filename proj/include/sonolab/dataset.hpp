#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <list>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "sonolab/container.hpp"
#include "sonolab/tensor.hpp"

namespace sonolab::data {

enum class ResizeType { resize, center_crop, random_crop };

ResizeType resize_type_from_string(const std::string& text);

struct DatasetSpec {
  std::string root;
  std::string key = kImageScKey;
  std::size_t batch_size = 4;
  bool shuffle = false;
  std::uint64_t seed = 0;
  std::pair<double, double> clip_range{-60.0, 0.0};
  std::pair<double, double> normalization_range{0.0, 1.0};
  std::array<std::size_t, 2> image_size{256, 256};
  ResizeType resize_type = ResizeType::resize;
  std::size_t cache_frames = 0;  // LRU frame cache capacity, 0 disables it

  /// Throws ErrorKind::parameter.
  void validate() const;
};

struct Item {
  std::string file;
  std::size_t frame = 0;

  friend bool operator==(const Item&, const Item&) = default;
};

/// Container files (*.h5) below root, recursively, in lexicographic order.
std::vector<std::string> find_container_files(const std::string& root);

/// One item per frame. Files lacking the key are reported together in one
/// ErrorKind::key error. Shuffled with a permutation seeded by (seed, epoch).
std::vector<Item> enumerate_items(const DatasetSpec& spec, std::size_t epoch = 0);

/// image (z, x) -> target size. Bilinear resize with half-pixel centres,
/// centred crop, or a crop at seeded uniform offsets.
RealTensor resize_or_crop(const RealTensor& image, std::array<std::size_t, 2> target,
                          ResizeType mode, std::uint64_t seed = 0);

/// Sequential batch iterator over one epoch. Batches are (batch, z, x);
/// the last one may be smaller.
class DataLoader {
 public:
  explicit DataLoader(DatasetSpec spec, std::size_t epoch = 0);

  const std::vector<Item>& items() const noexcept { return items_; }
  std::size_t n_batches() const noexcept;
  bool has_next() const noexcept { return cursor_ < items_.size(); }
  RealTensor next_batch();

  /// Starts another epoch (reshuffled when shuffling). The frame cache is kept.
  void reset(std::size_t epoch);

  std::size_t cache_hits() const noexcept { return cache_hits_; }

 private:
  RealTensor load_frame(const Item& item);

  DatasetSpec spec_;
  std::size_t epoch_;
  std::vector<Item> items_;
  std::size_t cursor_ = 0;
  std::map<std::string, UsFile> files_;

  using CacheKey = std::pair<std::string, std::size_t>;
  std::list<std::pair<CacheKey, RealTensor>> lru_;
  std::map<CacheKey, std::list<std::pair<CacheKey, RealTensor>>::iterator> cache_index_;
  std::size_t cache_hits_ = 0;
};

DataLoader make_dataloader(const DatasetSpec& spec, std::size_t epoch = 0);

}  // namespace sonolab::data
