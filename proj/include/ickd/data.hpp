#pragma once

#include "ickd/numerics.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ickd {

struct LabeledDataset {
    // Row-major, sample_count() x dim.
    Vec features;
    std::vector<std::uint16_t> labels;
    std::size_t dim = 0;
    std::size_t class_count = 0;

    std::size_t sample_count() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * dim, dim};
    }

    void validate() const;
    std::vector<std::size_t> class_histogram() const;
};

// Class centers are seeded unit vectors; each point is its center plus
// coordinate-wise Gaussian(0, spread^2) noise. Samples are grouped by
// class, per_class each, so labels are balanced by construction.
LabeledDataset gen_blobs(std::size_t k, std::size_t per_class, std::size_t dim,
                         double spread, std::uint64_t seed);

// Noise-free position of the i-th of per_class points on one arm of a
// k-armed planar spiral. gen_spirals perturbs only the angle, so with
// noise=0 every sample lies exactly on this curve.
void spiral_point(std::size_t arm, std::size_t k, std::size_t i,
                  std::size_t per_class, double& x, double& y);

LabeledDataset gen_spirals(std::size_t k, std::size_t per_class, double noise,
                           std::uint64_t seed);

// File layout, all integers little-endian: magic "ICKD", record type byte
// 0x01, N u32, D u32, K u16, features f64 row-major, labels u16.
void save_dataset(const LabeledDataset& ds, const std::string& path);
LabeledDataset load_dataset(const std::string& path);

} // namespace ickd
