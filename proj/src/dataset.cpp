#include "sonolab/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "sonolab/ops.hpp"

namespace sonolab::data {

namespace fs = std::filesystem;

namespace {

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::size_t uniform_below(std::mt19937_64& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

ResizeType resize_type_from_string(const std::string& text) {
  if (text == "resize") return ResizeType::resize;
  if (text == "center_crop") return ResizeType::center_crop;
  if (text == "random_crop") return ResizeType::random_crop;
  throw Error(ErrorKind::parameter, "unknown resize_type '" + text + "'");
}

void DatasetSpec::validate() const {
  if (batch_size < 1) throw Error(ErrorKind::parameter, "batch_size must be >= 1");
  if (image_size[0] < 1 || image_size[1] < 1) throw Error(ErrorKind::parameter, "image_size must be positive");
  if (!(clip_range.first < clip_range.second)) {
    throw Error(ErrorKind::parameter, "clip_range must be increasing");
  }
}

std::vector<std::string> find_container_files(const std::string& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) throw Error(ErrorKind::io, "dataset root '" + root + "' is not a directory");
  std::vector<std::string> files;
  for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == ".h5") files.push_back(it->path().string());
  }
  if (ec) throw Error(ErrorKind::io, "cannot list '" + root + "': " + ec.message());
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<Item> enumerate_items(const DatasetSpec& spec, std::size_t epoch) {
  spec.validate();
  const auto files = find_container_files(spec.root);
  if (files.empty()) throw Error(ErrorKind::io, "no container files under '" + spec.root + "'");
  std::vector<Item> items;
  std::vector<std::string> missing;
  for (const auto& path : files) {
    const UsFile file = UsFile::open(path);
    if (!file.has(spec.key)) {
      missing.push_back(path);
      continue;
    }
    for (std::size_t f = 0; f < file.n_frames(); ++f) items.push_back({path, f});
  }
  if (!missing.empty()) {
    std::string msg = std::to_string(missing.size()) + " file(s) lack '" + spec.key + "':";
    for (const auto& m : missing) msg += " " + m;
    throw Error(ErrorKind::key, msg);
  }
  if (spec.shuffle && items.size() > 1) {
    std::mt19937_64 rng(mix(spec.seed, epoch));
    for (std::size_t i = items.size() - 1; i > 0; --i) std::swap(items[i], items[uniform_below(rng, i + 1)]);
  }
  return items;
}

RealTensor resize_or_crop(const RealTensor& image, std::array<std::size_t, 2> target, ResizeType mode,
                          std::uint64_t seed) {
  if (image.rank() != 2) throw Error(ErrorKind::schema, "resize_or_crop expects a (z, x) image");
  const std::size_t sh = image.extent(0), sw = image.extent(1);
  const std::size_t th = target[0], tw = target[1];
  if (th < 1 || tw < 1) throw Error(ErrorKind::parameter, "target size must be positive");
  RealTensor out(image.axes(), {th, tw});

  if (mode == ResizeType::resize) {
    auto source_coord = [](std::size_t i, std::size_t src, std::size_t dst) {
      const double s = (static_cast<double>(i) + 0.5) * static_cast<double>(src) / static_cast<double>(dst) - 0.5;
      return std::clamp(s, 0.0, static_cast<double>(src - 1));
    };
    for (std::size_t r = 0; r < th; ++r) {
      const double sr = source_coord(r, sh, th);
      const std::size_t r0 = static_cast<std::size_t>(std::floor(sr));
      const std::size_t r1 = std::min(r0 + 1, sh - 1);
      const double fr = sr - static_cast<double>(r0);
      for (std::size_t c = 0; c < tw; ++c) {
        const double sc = source_coord(c, sw, tw);
        const std::size_t c0 = static_cast<std::size_t>(std::floor(sc));
        const std::size_t c1 = std::min(c0 + 1, sw - 1);
        const double fc = sc - static_cast<double>(c0);
        const double top = image(r0, c0) + fc * (image(r0, c1) - image(r0, c0));
        const double bottom = image(r1, c0) + fc * (image(r1, c1) - image(r1, c0));
        out(r, c) = top + fr * (bottom - top);
      }
    }
    return out;
  }

  if (th > sh || tw > sw) {
    throw Error(ErrorKind::parameter, "crop " + shape_to_string(std::vector<std::size_t>{th, tw}) +
                                          " is larger than the image " + shape_to_string(image.shape()));
  }
  std::size_t top = (sh - th) / 2, left = (sw - tw) / 2;
  if (mode == ResizeType::random_crop) {
    std::mt19937_64 rng(seed);
    top = uniform_below(rng, sh - th + 1);
    left = uniform_below(rng, sw - tw + 1);
  }
  for (std::size_t r = 0; r < th; ++r) {
    for (std::size_t c = 0; c < tw; ++c) out(r, c) = image(top + r, left + c);
  }
  return out;
}

DataLoader::DataLoader(DatasetSpec spec, std::size_t epoch)
    : spec_(std::move(spec)), epoch_(epoch), items_(enumerate_items(spec_, epoch)) {}

std::size_t DataLoader::n_batches() const noexcept {
  return (items_.size() + spec_.batch_size - 1) / spec_.batch_size;
}

void DataLoader::reset(std::size_t epoch) {
  epoch_ = epoch;
  items_ = enumerate_items(spec_, epoch);
  cursor_ = 0;
}

RealTensor DataLoader::load_frame(const Item& item) {
  const CacheKey key{item.file, item.frame};
  if (spec_.cache_frames > 0) {
    if (auto it = cache_index_.find(key); it != cache_index_.end()) {
      lru_.splice(lru_.begin(), lru_, it->second);
      ++cache_hits_;
      return it->second->second;
    }
  }
  auto file = files_.find(item.file);
  if (file == files_.end()) file = files_.emplace(item.file, UsFile::open(item.file)).first;
  const std::size_t index[] = {item.frame};
  RealTensor frame = file->second.load_data(spec_.key, std::vector<std::size_t>(index, index + 1));
  if (frame.rank() != 3) {
    throw Error(ErrorKind::schema, spec_.key + " must be (frame, z, x), got " + shape_to_string(frame.shape()));
  }
  const std::size_t height = frame.extent(1), width = frame.extent(2);
  RealTensor image = std::move(frame).reshaped({Axis::z, Axis::x}, {height, width});
  if (spec_.cache_frames > 0) {
    lru_.emplace_front(key, image);
    cache_index_[key] = lru_.begin();
    if (lru_.size() > spec_.cache_frames) {
      cache_index_.erase(lru_.back().first);
      lru_.pop_back();
    }
  }
  return image;
}

RealTensor DataLoader::next_batch() {
  if (!has_next()) throw Error(ErrorKind::bounds, "data loader is exhausted");
  const std::size_t n = std::min(spec_.batch_size, items_.size() - cursor_);
  const auto [th, tw] = spec_.image_size;
  RealTensor batch({Axis::batch, Axis::z, Axis::x}, {n, th, tw});
  for (std::size_t b = 0; b < n; ++b) {
    const std::size_t position = cursor_ + b;
    const Item& item = items_[position];
    try {
      RealTensor image = load_frame(item);
      for (double& v : image.values()) {
        v = ops::clip_map_value(v, spec_.clip_range, spec_.normalization_range);
      }
      const RealTensor sized =
          resize_or_crop(image, spec_.image_size, spec_.resize_type, mix(mix(spec_.seed, epoch_), position));
      std::copy(sized.values().begin(), sized.values().end(), batch.values().begin() +
                                                                  static_cast<std::ptrdiff_t>(b * th * tw));
    } catch (const Error& e) {
      throw e.with_context("'" + item.file + "' frame " + std::to_string(item.frame));
    }
  }
  cursor_ += n;
  return batch;
}

DataLoader make_dataloader(const DatasetSpec& spec, std::size_t epoch) { return DataLoader(spec, epoch); }

}  // namespace sonolab::data
