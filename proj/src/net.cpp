#include "ickd/net.hpp"

#include "ickd/error.hpp"
#include "ickd/kernels.hpp"
#include "ickd/rng.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <utility>

namespace ickd {

namespace {

constexpr char kCheckpointMagic[4] = {'I', 'C', 'K', 'D'};
constexpr std::uint16_t kCheckpointVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

std::size_t weight_count(const std::vector<std::size_t>& widths,
                         std::size_t layer) {
    return widths[layer + 1] * widths[layer];
}

} // namespace

void MlpArchitecture::validate() const {
    if (layer_widths.size() < 2) {
        throw InvalidArgument("architecture needs at least input and output widths");
    }
    for (std::size_t w : layer_widths) {
        if (w == 0) throw InvalidArgument("architecture has a zero-width layer");
    }
    if (layer_widths.back() < 2) {
        throw InvalidArgument("output layer needs at least 2 classes");
    }
}

std::size_t parameter_count(const MlpArchitecture& arch) {
    arch.validate();
    std::size_t total = 0;
    for (std::size_t l = 0; l + 1 < arch.layer_widths.size(); ++l) {
        total += weight_count(arch.layer_widths, l) + arch.layer_widths[l + 1];
    }
    return total;
}

void MlpModel::validate() const {
    architecture.validate();
    if (parameters.size() != parameter_count(architecture)) {
        throw InvalidArgument("parameter vector does not match architecture");
    }
    if (feature_layer_index + 1 >= architecture.layer_widths.size()) {
        throw InvalidArgument("feature layer index must name a non-logit activation");
    }
}

MlpModel init_model(const MlpArchitecture& arch, std::uint64_t seed) {
    return init_model(arch, seed, arch.layer_widths.size() - 2);
}

MlpModel init_model(const MlpArchitecture& arch, std::uint64_t seed,
                    std::size_t feature_layer_index) {
    arch.validate();
    MlpModel model;
    model.architecture = arch;
    model.feature_layer_index = feature_layer_index;
    model.parameters.resize(parameter_count(arch));

    SplitMix64 rng(seed);
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < arch.layer_widths.size(); ++l) {
        const double bound = 1.0 / std::sqrt(double(arch.layer_widths[l]));
        const std::size_t weights = weight_count(arch.layer_widths, l);
        for (std::size_t i = 0; i < weights; ++i) {
            model.parameters[offset + i] = bound * rng.next_signed();
        }
        offset += weights;
        // biases stay zero
        offset += arch.layer_widths[l + 1];
    }
    model.validate();
    return model;
}

ForwardRecord forward(const MlpModel& model, std::span<const double> input) {
    model.validate();
    const auto& widths = model.architecture.layer_widths;
    if (input.size() != widths.front()) {
        throw InvalidArgument("input width does not match architecture");
    }

    ForwardRecord record;
    record.layer_widths = widths;
    record.activations.reserve(widths.size());
    record.activations.emplace_back(input.begin(), input.end());

    const auto& ops = kernels::active();
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const std::size_t in_dim = widths[l];
        const std::size_t out_dim = widths[l + 1];
        const double* w = model.parameters.data() + offset;
        const double* b = w + out_dim * in_dim;
        const Vec& prev = record.activations.back();

        Vec next(out_dim);
        const bool last = (l + 2 == widths.size());
        for (std::size_t r = 0; r < out_dim; ++r) {
            const double z = ops.dot(w + r * in_dim, prev.data(), in_dim) + b[r];
            next[r] = last ? z : (z > 0.0 ? z : 0.0);
        }
        record.activations.push_back(std::move(next));
        offset += out_dim * in_dim + out_dim;
    }

    record.logits = record.activations.back();
    record.features = record.activations[model.feature_layer_index];
    return record;
}

Vec backward(const MlpModel& model, const ForwardRecord& record,
             const Vec& logit_gradient) {
    model.validate();
    const auto& widths = model.architecture.layer_widths;
    if (record.layer_widths != widths) {
        throw InvalidArgument("forward record comes from a different architecture");
    }
    if (record.activations.size() != widths.size()) {
        throw InvalidArgument("forward record is incomplete");
    }
    if (logit_gradient.size() != widths.back()) {
        throw InvalidArgument("logit gradient width does not match architecture");
    }

    Vec gradient(model.parameters.size(), 0.0);
    const auto& ops = kernels::active();

    // Offsets of each layer's weight block.
    std::vector<std::size_t> offsets(widths.size() - 1);
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        offsets[l] = offset;
        offset += widths[l + 1] * widths[l] + widths[l + 1];
    }

    Vec delta = logit_gradient;
    for (std::size_t l = widths.size() - 1; l-- > 0;) {
        const std::size_t in_dim = widths[l];
        const std::size_t out_dim = widths[l + 1];
        const double* w = model.parameters.data() + offsets[l];
        const Vec& prev = record.activations[l];

        double* dw = gradient.data() + offsets[l];
        double* db = dw + out_dim * in_dim;
        for (std::size_t r = 0; r < out_dim; ++r) {
            ops.axpy(delta[r], prev.data(), dw + r * in_dim, in_dim);
            db[r] += delta[r];
        }

        if (l == 0) break;
        Vec prev_delta(in_dim, 0.0);
        for (std::size_t r = 0; r < out_dim; ++r) {
            ops.axpy(delta[r], w + r * in_dim, prev_delta.data(), in_dim);
        }
        // relu gate: layer l's stored activation is already rectified, so
        // a positive entry marks a pass-through unit.
        for (std::size_t i = 0; i < in_dim; ++i) {
            if (prev[i] <= 0.0) prev_delta[i] = 0.0;
        }
        delta = std::move(prev_delta);
    }
    return gradient;
}

void sgd_step(MlpModel& model, const Vec& gradient, const SgdConfig& cfg,
              Vec& velocity) {
    if (gradient.size() != model.parameters.size()) {
        throw InvalidArgument("gradient size does not match parameters");
    }
    if (velocity.empty()) velocity.assign(model.parameters.size(), 0.0);
    if (velocity.size() != model.parameters.size()) {
        throw InvalidArgument("velocity size does not match parameters");
    }
    for (std::size_t i = 0; i < model.parameters.size(); ++i) {
        const double g = gradient[i] + cfg.weight_decay * model.parameters[i];
        velocity[i] = cfg.momentum * velocity[i] + g;
        model.parameters[i] -= cfg.lr * velocity[i];
    }
}

namespace {

void write_bytes(std::ofstream& out, const void* data, std::size_t n) {
    out.write(static_cast<const char*>(data), std::streamsize(n));
}

template <typename T>
void write_scalar(std::ofstream& out, T value) {
    write_bytes(out, &value, sizeof(T));
}

template <typename T>
T read_scalar(std::ifstream& in, std::size_t& offset, const char* field) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) {
        throw FormatError(std::string("checkpoint truncated reading ") + field,
                          offset);
    }
    offset += sizeof(T);
    return value;
}

} // namespace

void save_checkpoint(const MlpModel& model, const std::string& path) {
    model.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open checkpoint for writing: " + path);

    write_bytes(out, kCheckpointMagic, 4);
    write_scalar(out, kCheckpointVersion);
    write_scalar(out, std::uint16_t(model.architecture.layer_widths.size()));
    for (std::size_t w : model.architecture.layer_widths) {
        write_scalar(out, std::uint32_t(w));
    }
    write_scalar(out, std::uint16_t(model.feature_layer_index));
    write_bytes(out, model.parameters.data(),
                model.parameters.size() * sizeof(double));
    out.flush();
    if (!out) throw Error("write failed for checkpoint: " + path);
}

MlpModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint: " + path);

    std::size_t offset = 0;
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
        throw FormatError("checkpoint magic mismatch", 0);
    }
    offset += 4;

    const auto version = read_scalar<std::uint16_t>(in, offset, "version");
    if (version != kCheckpointVersion) {
        throw FormatError("unsupported checkpoint version " + std::to_string(version),
                          offset - sizeof(std::uint16_t));
    }
    const auto layer_count = read_scalar<std::uint16_t>(in, offset, "layer count");
    if (layer_count < 2) {
        throw FormatError("checkpoint layer count must be at least 2",
                          offset - sizeof(std::uint16_t));
    }

    MlpModel model;
    model.architecture.layer_widths.resize(layer_count);
    for (std::size_t l = 0; l < layer_count; ++l) {
        model.architecture.layer_widths[l] =
            read_scalar<std::uint32_t>(in, offset, "layer width");
    }
    model.feature_layer_index =
        read_scalar<std::uint16_t>(in, offset, "feature layer index");

    model.architecture.validate();
    model.parameters.resize(parameter_count(model.architecture));
    in.read(reinterpret_cast<char*>(model.parameters.data()),
            std::streamsize(model.parameters.size() * sizeof(double)));
    if (!in) throw FormatError("checkpoint truncated reading parameters", offset);
    offset += model.parameters.size() * sizeof(double);

    in.peek();
    if (!in.eof()) throw FormatError("trailing bytes after checkpoint payload", offset);
    model.validate();
    return model;
}

} // namespace ickd
