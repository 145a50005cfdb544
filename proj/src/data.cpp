#include "ickd/data.hpp"

#include "ickd/error.hpp"
#include "ickd/kernels.hpp"
#include "ickd/rng.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <numbers>

namespace ickd {

namespace {

constexpr char kDatasetMagic[4] = {'I', 'C', 'K', 'D'};
constexpr std::uint8_t kDatasetRecordType = 0x01;

// Spiral arms start at kInnerRadius and wind kWinding radians while the
// radius grows to 1; three quarter-turns interleave adjacent arms enough
// that no single hyperplane separates them.
constexpr double kInnerRadius = 0.15;
constexpr double kWinding = 1.5 * std::numbers::pi;

} // namespace

void LabeledDataset::validate() const {
    if (labels.empty()) throw InvalidArgument("dataset is empty");
    if (dim == 0) throw InvalidArgument("dataset feature dimension is zero");
    if (class_count < 2) throw InvalidArgument("dataset needs at least 2 classes");
    if (features.size() != labels.size() * dim) {
        throw InvalidArgument("feature matrix shape does not match labels");
    }
    if (labels.size() < class_count) {
        throw InvalidArgument("fewer samples than classes");
    }
    for (std::uint16_t label : labels) {
        if (label >= class_count) throw InvalidArgument("label out of range");
    }
    if (!all_finite(features)) throw InvalidArgument("dataset has non-finite features");
}

std::vector<std::size_t> LabeledDataset::class_histogram() const {
    std::vector<std::size_t> counts(class_count, 0);
    for (std::uint16_t label : labels) ++counts[label];
    return counts;
}

LabeledDataset gen_blobs(std::size_t k, std::size_t per_class, std::size_t dim,
                         double spread, std::uint64_t seed) {
    if (k < 2) throw InvalidArgument("gen_blobs needs k >= 2");
    if (per_class < 2) throw InvalidArgument("gen_blobs needs per_class >= 2");
    if (dim == 0) throw InvalidArgument("gen_blobs needs dim >= 1");
    if (!(spread >= 0.0)) throw InvalidArgument("gen_blobs needs spread >= 0");

    SplitMix64 rng(seed);
    Vec centers(k * dim);
    for (std::size_t c = 0; c < k; ++c) {
        double* center = centers.data() + c * dim;
        double norm = 0.0;
        do {
            for (std::size_t d = 0; d < dim; ++d) center[d] = rng.next_gaussian();
            norm = std::sqrt(kernels::active().dot(center, center, dim));
        } while (norm < kNormFloor);
        for (std::size_t d = 0; d < dim; ++d) center[d] /= norm;
    }

    LabeledDataset ds;
    ds.dim = dim;
    ds.class_count = k;
    ds.labels.resize(k * per_class);
    ds.features.resize(k * per_class * dim);
    for (std::size_t c = 0; c < k; ++c) {
        const double* center = centers.data() + c * dim;
        for (std::size_t i = 0; i < per_class; ++i) {
            const std::size_t sample = c * per_class + i;
            ds.labels[sample] = std::uint16_t(c);
            double* row = ds.features.data() + sample * dim;
            for (std::size_t d = 0; d < dim; ++d) {
                row[d] = center[d] + spread * rng.next_gaussian();
            }
        }
    }
    ds.validate();
    return ds;
}

void spiral_point(std::size_t arm, std::size_t k, std::size_t i,
                  std::size_t per_class, double& x, double& y) {
    const double t = per_class > 1 ? double(i) / double(per_class - 1) : 0.0;
    const double radius = kInnerRadius + (1.0 - kInnerRadius) * t;
    const double angle =
        2.0 * std::numbers::pi * double(arm) / double(k) + kWinding * t;
    x = radius * std::cos(angle);
    y = radius * std::sin(angle);
}

LabeledDataset gen_spirals(std::size_t k, std::size_t per_class, double noise,
                           std::uint64_t seed) {
    if (k < 2 || k > 8) throw InvalidArgument("gen_spirals needs k in [2, 8]");
    if (per_class < 2) throw InvalidArgument("gen_spirals needs per_class >= 2");
    if (!(noise >= 0.0)) throw InvalidArgument("gen_spirals needs noise >= 0");

    SplitMix64 rng(seed);
    LabeledDataset ds;
    ds.dim = 2;
    ds.class_count = k;
    ds.labels.resize(k * per_class);
    ds.features.resize(k * per_class * 2);
    for (std::size_t arm = 0; arm < k; ++arm) {
        for (std::size_t i = 0; i < per_class; ++i) {
            const std::size_t sample = arm * per_class + i;
            ds.labels[sample] = std::uint16_t(arm);

            double x = 0.0;
            double y = 0.0;
            spiral_point(arm, k, i, per_class, x, y);
            const double jitter = noise * rng.next_gaussian();
            const double c = std::cos(jitter);
            const double s = std::sin(jitter);
            ds.features[sample * 2] = c * x - s * y;
            ds.features[sample * 2 + 1] = s * x + c * y;
        }
    }
    ds.validate();
    return ds;
}

namespace {

void write_bytes(std::ofstream& out, const void* data, std::size_t n) {
    out.write(static_cast<const char*>(data), std::streamsize(n));
}

void read_bytes(std::ifstream& in, void* data, std::size_t n,
                std::size_t& offset, const char* field) {
    in.read(static_cast<char*>(data), std::streamsize(n));
    if (!in) {
        throw FormatError(std::string("dataset truncated reading ") + field, offset);
    }
    offset += n;
}

} // namespace

void save_dataset(const LabeledDataset& ds, const std::string& path) {
    ds.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open dataset for writing: " + path);

    write_bytes(out, kDatasetMagic, 4);
    write_bytes(out, &kDatasetRecordType, 1);
    const std::uint32_t n = std::uint32_t(ds.sample_count());
    const std::uint32_t dim = std::uint32_t(ds.dim);
    const std::uint16_t classes = std::uint16_t(ds.class_count);
    write_bytes(out, &n, 4);
    write_bytes(out, &dim, 4);
    write_bytes(out, &classes, 2);
    write_bytes(out, ds.features.data(), ds.features.size() * sizeof(double));
    write_bytes(out, ds.labels.data(), ds.labels.size() * sizeof(std::uint16_t));
    out.flush();
    if (!out) throw Error("write failed for dataset: " + path);
}

LabeledDataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open dataset: " + path);

    std::size_t offset = 0;
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kDatasetMagic, 4) != 0) {
        throw FormatError("dataset magic mismatch", 0);
    }
    offset += 4;

    std::uint8_t record_type = 0;
    read_bytes(in, &record_type, 1, offset, "record type");
    if (record_type != kDatasetRecordType) {
        throw FormatError("unsupported dataset record type", offset - 1);
    }

    std::uint32_t n = 0;
    std::uint32_t dim = 0;
    std::uint16_t classes = 0;
    read_bytes(in, &n, 4, offset, "sample count");
    read_bytes(in, &dim, 4, offset, "feature dimension");
    read_bytes(in, &classes, 2, offset, "class count");

    LabeledDataset ds;
    ds.dim = dim;
    ds.class_count = classes;
    ds.features.resize(std::size_t(n) * dim);
    ds.labels.resize(n);
    read_bytes(in, ds.features.data(), ds.features.size() * sizeof(double),
               offset, "features");
    read_bytes(in, ds.labels.data(), ds.labels.size() * sizeof(std::uint16_t),
               offset, "labels");

    in.peek();
    if (!in.eof()) throw FormatError("trailing bytes after dataset payload", offset);
    ds.validate();
    return ds;
}

} // namespace ickd
