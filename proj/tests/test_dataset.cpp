#include <algorithm>
#include <fstream>
#include <set>

#include "doctest.h"
#include "sonolab/dataset.hpp"
#include "support.hpp"

using namespace sonolab;
using namespace sonolab::data;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an exception");
  return ErrorKind::io;
}

// A container whose image_sc frames are filled with -10 * (file_id + frame).
void write_images(const std::string& path, std::size_t frames, double file_id, std::size_t n_z = 20,
                  std::size_t n_x = 16, const char* key = "image_sc") {
  auto [probe, scan] = testing::small_setup(n_z, n_x);
  RealTensor img({Axis::frame, Axis::z, Axis::x}, {frames, n_z, n_x});
  for (std::size_t f = 0; f < frames; ++f) {
    for (std::size_t i = 0; i < n_z * n_x; ++i) {
      img[f * n_z * n_x + i] = -10.0 * (file_id + static_cast<double>(f)) - static_cast<double>(i % 7);
    }
  }
  write_file(path, probe, scan, {{key, img}});
}

DatasetSpec spec_for(const testing::TempDir& dir) {
  DatasetSpec spec;
  spec.root = dir.path().string();
  spec.image_size = {32, 32};
  return spec;
}

std::vector<RealTensor> drain(DataLoader& loader) {
  std::vector<RealTensor> out;
  while (loader.has_next()) out.push_back(loader.next_batch());
  return out;
}

}  // namespace

TEST_CASE("items enumerate every frame in lexicographic file order") {
  testing::TempDir dir;
  std::filesystem::create_directories(dir.path() / "sub");
  write_images(dir.file("b.h5"), 3, 1);
  write_images((dir.path() / "sub" / "a.h5").string(), 3, 2);
  write_images(dir.file("a.h5"), 1, 0);
  { std::ofstream(dir.file("notes.txt")) << "ignored\n"; }

  const auto files = find_container_files(dir.path().string());
  REQUIRE(files.size() == 3);
  CHECK(std::is_sorted(files.begin(), files.end()));

  DatasetSpec spec = spec_for(dir);
  const auto items = enumerate_items(spec);
  REQUIRE(items.size() == 7);
  CHECK(items[0] == Item{dir.file("a.h5"), 0});
  CHECK(items[1] == Item{dir.file("b.h5"), 0});
  CHECK(items[3] == Item{dir.file("b.h5"), 2});
  CHECK(items[6].frame == 2);
}

TEST_CASE("shuffling is seeded by seed and epoch and covers every item") {
  testing::TempDir dir;
  write_images(dir.file("a.h5"), 3, 0);
  write_images(dir.file("b.h5"), 3, 3);
  DatasetSpec spec = spec_for(dir);
  const auto ordered = enumerate_items(spec);
  CHECK(ordered.size() == 6);
  spec.shuffle = true;
  spec.seed = 42;
  const auto e0 = enumerate_items(spec, 0);
  CHECK(e0 == enumerate_items(spec, 0));
  bool any_different = false;
  for (std::size_t epoch = 0; epoch < 6; ++epoch) {
    auto items = enumerate_items(spec, epoch);
    any_different = any_different || items != e0;
    CHECK(items.size() == ordered.size());
    auto less = [](const Item& a, const Item& b) { return std::tie(a.file, a.frame) < std::tie(b.file, b.frame); };
    std::sort(items.begin(), items.end(), less);
    CHECK(items == ordered);
  }
  CHECK(any_different);
  spec.seed = 43;
  bool seed_matters = false;
  for (std::size_t epoch = 0; epoch < 4; ++epoch) {
    DatasetSpec other = spec;
    other.seed = 42;
    seed_matters = seed_matters || enumerate_items(spec, epoch) != enumerate_items(other, epoch);
  }
  CHECK(seed_matters);
}

TEST_CASE("batches have the configured size and normalized range") {
  testing::TempDir dir;
  write_images(dir.file("a.h5"), 3, 0);
  write_images(dir.file("b.h5"), 3, 3);
  DatasetSpec spec = spec_for(dir);
  DataLoader loader(spec);
  CHECK(loader.n_batches() == 2);
  const auto batches = drain(loader);
  REQUIRE(batches.size() == 2);
  CHECK(batches[0].shape() == std::vector<std::size_t>{4, 32, 32});
  CHECK(batches[1].shape() == std::vector<std::size_t>{2, 32, 32});
  for (const auto& b : batches) {
    for (double v : b.values()) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  CHECK(kind_of([&] { loader.next_batch(); }) == ErrorKind::bounds);

  // -60 dB maps to 0; frame 0 of file 0 has maximum 0 dB, which maps to 1.
  DatasetSpec crop = spec;
  crop.image_size = {20, 16};
  crop.resize_type = ResizeType::center_crop;
  DataLoader exact(crop);
  const RealTensor first = exact.next_batch();
  CHECK(first(0, 0, 0) == 1.0);
  CHECK(first(0, 0, 1) == doctest::Approx(59.0 / 60.0));
}

TEST_CASE("files lacking the key are reported together") {
  testing::TempDir dir;
  write_images(dir.file("a.h5"), 1, 0);
  write_images(dir.file("b.h5"), 1, 0, 20, 16, "image");
  write_images(dir.file("c.h5"), 1, 0, 20, 16, "image");
  try {
    enumerate_items(spec_for(dir));
    FAIL("expected an exception");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::key);
    const std::string msg = e.what();
    CHECK(msg.find("b.h5") != std::string::npos);
    CHECK(msg.find("c.h5") != std::string::npos);
    CHECK(msg.find("a.h5") == std::string::npos);
  }
}

TEST_CASE("dataset roots") {
  testing::TempDir dir;
  CHECK(kind_of([&] { enumerate_items(spec_for(dir)); }) == ErrorKind::io);
  CHECK(kind_of([&] { find_container_files(dir.file("nope")); }) == ErrorKind::io);
  DatasetSpec bad = spec_for(dir);
  bad.batch_size = 0;
  CHECK(kind_of([&] { bad.validate(); }) == ErrorKind::parameter);
  CHECK(resize_type_from_string("center_crop") == ResizeType::center_crop);
  CHECK(kind_of([] { resize_type_from_string("stretch"); }) == ErrorKind::parameter);
}

TEST_CASE("resize and crop") {
  RealTensor img({Axis::z, Axis::x}, {4, 6});
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 6; ++c) img(r, c) = static_cast<double>(10 * r + c);
  }
  const RealTensor center = resize_or_crop(img, {2, 2}, ResizeType::center_crop);
  CHECK(center(0, 0) == img(1, 2));
  CHECK(center(1, 1) == img(2, 3));

  const RealTensor constant = resize_or_crop(RealTensor({Axis::z, Axis::x}, {7, 5}, 0.25), {13, 3}, ResizeType::resize);
  for (double v : constant.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));

  CHECK(resize_or_crop(img, {4, 6}, ResizeType::resize) == img);

  // A linear ramp stays linear under half-pixel bilinear upsampling (away from the clamped border).
  const RealTensor up = resize_or_crop(img, {8, 12}, ResizeType::resize);
  CHECK(up(3, 5) == doctest::Approx(10.0 * 1.25 + 2.25));

  const RealTensor a = resize_or_crop(img, {2, 3}, ResizeType::random_crop, 5);
  CHECK(a == resize_or_crop(img, {2, 3}, ResizeType::random_crop, 5));
  std::set<double> corners;
  for (std::uint64_t s = 0; s < 50; ++s) corners.insert(resize_or_crop(img, {2, 3}, ResizeType::random_crop, s)(0, 0));
  CHECK(corners.size() > 1);
  for (double v : corners) {
    const auto r = static_cast<std::size_t>(v) / 10, c = static_cast<std::size_t>(v) % 10;
    CHECK(r <= 2);
    CHECK(c <= 3);
  }

  CHECK(kind_of([&] { resize_or_crop(img, {5, 2}, ResizeType::center_crop); }) == ErrorKind::parameter);
  CHECK(kind_of([&] { resize_or_crop(img, {2, 7}, ResizeType::random_crop); }) == ErrorKind::parameter);
}

TEST_CASE("loaders are deterministic, including random crops") {
  testing::TempDir dir;
  write_images(dir.file("a.h5"), 3, 0, 40, 40);
  write_images(dir.file("b.h5"), 2, 3, 40, 40);
  DatasetSpec spec = spec_for(dir);
  spec.shuffle = true;
  spec.seed = 7;
  spec.resize_type = ResizeType::random_crop;
  spec.image_size = {24, 24};
  DataLoader a(spec, 2), b(spec, 2);
  CHECK(drain(a) == drain(b));
}

TEST_CASE("the frame cache does not change results") {
  testing::TempDir dir;
  write_images(dir.file("a.h5"), 3, 0);
  write_images(dir.file("b.h5"), 2, 3);
  DatasetSpec spec = spec_for(dir);
  spec.shuffle = true;
  DatasetSpec cached = spec;
  cached.cache_frames = 16;
  DataLoader plain(spec), fast(cached);
  CHECK(drain(plain) == drain(fast));
  CHECK(fast.cache_hits() == 0);
  plain.reset(1);
  fast.reset(1);
  CHECK(drain(plain) == drain(fast));
  CHECK(fast.cache_hits() == 5);

  DatasetSpec tiny = cached;
  tiny.cache_frames = 1;
  DataLoader small(tiny);
  DataLoader reference(spec);
  CHECK(drain(small) == drain(reference));
}

TEST_CASE("load errors name the file and frame") {
  testing::TempDir dir;
  write_images(dir.file("a.h5"), 2, 0);
  DatasetSpec spec = spec_for(dir);
  DataLoader loader(spec);
  std::filesystem::remove(dir.file("a.h5"));
  { std::ofstream(dir.file("a.h5")) << "corrupt"; }
  try {
    loader.next_batch();
    FAIL("expected an exception");
  } catch (const Error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("a.h5") != std::string::npos);
    CHECK(msg.find("frame 0") != std::string::npos);
    CHECK(e.kind() == ErrorKind::format);
  }
}

TEST_CASE("acceptance-sized batches") {
  testing::TempDir dir;
  write_images(dir.file("a.h5"), 5, 0, 64, 48);
  DatasetSpec spec;
  spec.root = dir.path().string();
  DataLoader loader = make_dataloader(spec);
  CHECK(loader.next_batch().shape() == std::vector<std::size_t>{4, 256, 256});
}
