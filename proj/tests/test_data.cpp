#include "doctest.h"

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ickd/data.hpp"
#include "ickd/error.hpp"
#include "ickd/rng.hpp"

using namespace ickd;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void spit(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out);
  out.write(bytes.data(), std::streamsize(bytes.size()));
}

// Class means of a dataset, one row per class.
std::vector<Vec> class_means(const LabeledDataset& ds) {
  std::vector<Vec> means(ds.class_count, Vec(ds.dim, 0.0));
  std::vector<std::size_t> counts(ds.class_count, 0);
  for (std::size_t i = 0; i < ds.sample_count(); ++i) {
    const auto row = ds.row(i);
    for (std::size_t d = 0; d < ds.dim; ++d) means[ds.labels[i]][d] += row[d];
    ++counts[ds.labels[i]];
  }
  for (std::size_t c = 0; c < ds.class_count; ++c)
    for (double& v : means[c]) v /= double(counts[c]);
  return means;
}

double nearest_mean_accuracy(const LabeledDataset& ds,
                             const std::vector<Vec>& means) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.sample_count(); ++i) {
    const auto row = ds.row(i);
    std::size_t best = 0;
    double best_d = 1e300;
    for (std::size_t c = 0; c < means.size(); ++c) {
      double d2 = 0.0;
      for (std::size_t d = 0; d < ds.dim; ++d) {
        const double diff = row[d] - means[c][d];
        d2 += diff * diff;
      }
      if (d2 < best_d) {
        best_d = d2;
        best = c;
      }
    }
    if (best == ds.labels[i]) ++correct;
  }
  return double(correct) / double(ds.sample_count());
}

} // namespace

TEST_SUITE("data") {

TEST_CASE("gen_blobs shape, balance, and determinism") {
  const LabeledDataset ds = gen_blobs(5, 12, 7, 0.3, 11);
  CHECK(ds.sample_count() == 60);
  CHECK(ds.dim == 7);
  CHECK(ds.class_count == 5);
  CHECK_NOTHROW(ds.validate());
  for (std::size_t c : ds.class_histogram()) CHECK(c == 12);
  // Grouped by class.
  for (std::size_t i = 0; i < ds.sample_count(); ++i)
    CHECK(ds.labels[i] == i / 12);

  const LabeledDataset again = gen_blobs(5, 12, 7, 0.3, 11);
  CHECK(again.features == ds.features);
  CHECK(again.labels == ds.labels);
  const LabeledDataset other = gen_blobs(5, 12, 7, 0.3, 12);
  CHECK(other.features != ds.features);
}

TEST_CASE("gen_blobs with zero spread collapses onto unit centers") {
  const LabeledDataset ds = gen_blobs(4, 6, 5, 0.0, 3);
  for (std::size_t c = 0; c < 4; ++c) {
    const auto first = ds.row(c * 6);
    double norm = 0.0;
    for (double v : first) norm += v * v;
    CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-12);
    for (std::size_t i = 0; i < 6; ++i) {
      const auto row = ds.row(c * 6 + i);
      for (std::size_t d = 0; d < 5; ++d) CHECK(row[d] == first[d]);
    }
  }
}

TEST_CASE("gen_blobs at small spread is nearest-centroid separable") {
  const LabeledDataset ds = gen_blobs(4, 50, 8, 0.05, 21);
  CHECK(nearest_mean_accuracy(ds, class_means(ds)) > 0.99);
}

TEST_CASE("gen_blobs input validation") {
  CHECK_THROWS_AS(gen_blobs(1, 10, 3, 0.1, 1), InvalidArgument);
  CHECK_THROWS_AS(gen_blobs(3, 1, 3, 0.1, 1), InvalidArgument);
  CHECK_THROWS_AS(gen_blobs(3, 10, 0, 0.1, 1), InvalidArgument);
  CHECK_THROWS_AS(gen_blobs(3, 10, 3, -0.1, 1), InvalidArgument);
}

TEST_CASE("gen_spirals with zero noise lies exactly on the curve") {
  const std::size_t k = 3;
  const std::size_t per_class = 40;
  const LabeledDataset ds = gen_spirals(k, per_class, 0.0, 17);
  CHECK(ds.dim == 2);
  CHECK(ds.class_count == k);
  CHECK(ds.sample_count() == k * per_class);
  double worst = 0.0;
  for (std::size_t arm = 0; arm < k; ++arm) {
    for (std::size_t i = 0; i < per_class; ++i) {
      double x = 0.0, y = 0.0;
      spiral_point(arm, k, i, per_class, x, y);
      const auto row = ds.row(arm * per_class + i);
      worst = std::max({worst, std::abs(row[0] - x), std::abs(row[1] - y)});
    }
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("gen_spirals noise perturbs the angle, not the radius") {
  const std::size_t k = 4;
  const std::size_t per_class = 25;
  const LabeledDataset ds = gen_spirals(k, per_class, 0.2, 9);
  for (std::size_t arm = 0; arm < k; ++arm) {
    for (std::size_t i = 0; i < per_class; ++i) {
      double x = 0.0, y = 0.0;
      spiral_point(arm, k, i, per_class, x, y);
      const double want_r = std::hypot(x, y);
      const auto row = ds.row(arm * per_class + i);
      CHECK(std::hypot(row[0], row[1]) ==
            doctest::Approx(want_r).epsilon(1e-9));
    }
  }
}

TEST_CASE("gen_spirals input validation") {
  CHECK_THROWS_AS(gen_spirals(1, 10, 0.1, 1), InvalidArgument);
  CHECK_THROWS_AS(gen_spirals(9, 10, 0.1, 1), InvalidArgument);
  CHECK_THROWS_AS(gen_spirals(3, 1, 0.1, 1), InvalidArgument);
  CHECK_THROWS_AS(gen_spirals(3, 10, -0.2, 1), InvalidArgument);
}

TEST_CASE("dataset files round-trip bit for bit") {
  const std::string path = temp_path("ickd_data_roundtrip.bin");
  const LabeledDataset ds = gen_blobs(3, 8, 4, 0.2, 5);
  save_dataset(ds, path);
  const LabeledDataset r = load_dataset(path);
  CHECK(r.features == ds.features);
  CHECK(r.labels == ds.labels);
  CHECK(r.dim == ds.dim);
  CHECK(r.class_count == ds.class_count);

  const std::string path2 = temp_path("ickd_data_roundtrip2.bin");
  save_dataset(r, path2);
  CHECK(slurp(path) == slurp(path2));
  std::remove(path.c_str());
  std::remove(path2.c_str());
}

TEST_CASE("dataset loader parses a hand-assembled file") {
  // Two samples, dim 2, two classes; doubles are IEEE-754 little-endian.
  std::string bytes;
  bytes += "ICKD";
  bytes += '\x01';
  const auto push_u32 = [&bytes](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes += char((v >> (8 * i)) & 0xFF);
  };
  const auto push_u16 = [&bytes](std::uint16_t v) {
    bytes += char(v & 0xFF);
    bytes += char(v >> 8);
  };
  const auto push_f64 = [&bytes](double v) {
    std::array<char, 8> raw{};
    std::memcpy(raw.data(), &v, 8);
    bytes.append(raw.data(), 8);
  };
  push_u32(2);
  push_u32(2);
  push_u16(2);
  push_f64(1.5);
  push_f64(-2.0);
  push_f64(0.25);
  push_f64(4.0);
  push_u16(0);
  push_u16(1);

  const std::string path = temp_path("ickd_data_manual.bin");
  spit(path, bytes);
  const LabeledDataset ds = load_dataset(path);
  CHECK(ds.sample_count() == 2);
  CHECK(ds.dim == 2);
  CHECK(ds.class_count == 2);
  CHECK(ds.features == Vec{1.5, -2.0, 0.25, 4.0});
  CHECK(ds.labels == std::vector<std::uint16_t>{0, 1});
  std::remove(path.c_str());
}

TEST_CASE("dataset loader reports malformed files") {
  const std::string path = temp_path("ickd_data_bad.bin");
  const LabeledDataset ds = gen_blobs(2, 4, 3, 0.2, 5);
  save_dataset(ds, path);
  const std::string good = slurp(path);

  SUBCASE("bad magic") {
    std::string bytes = good;
    bytes[2] = 'x';
    spit(path, bytes);
    try {
      load_dataset(path);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.byte_offset() == 0);
    }
  }
  SUBCASE("truncated labels") {
    spit(path, good.substr(0, good.size() - 1));
    CHECK_THROWS_AS(load_dataset(path), FormatError);
  }
  SUBCASE("trailing junk") {
    spit(path, good + "!");
    try {
      load_dataset(path);
      FAIL("expected FormatError");
    } catch (const FormatError& e) {
      CHECK(e.byte_offset() == good.size());
    }
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_dataset(temp_path("ickd_data_missing.bin")), Error);
  }
  std::remove(path.c_str());
}

TEST_CASE("dataset validate rejects inconsistency") {
  LabeledDataset ds = gen_blobs(2, 4, 3, 0.2, 5);
  ds.labels[0] = 7;
  CHECK_THROWS_AS(ds.validate(), InvalidArgument);
  ds = gen_blobs(2, 4, 3, 0.2, 5);
  ds.features.pop_back();
  CHECK_THROWS_AS(ds.validate(), InvalidArgument);
}

} // TEST_SUITE
