#pragma once

#include "ickd/numerics.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace ickd {

enum class Activation { relu };

// Widths include the input layer, so [4, 3, 2] is a 2-affine-stage net
// mapping 4 inputs to 2 logits through a 3-unit hidden layer.
struct MlpArchitecture {
    std::vector<std::size_t> layer_widths;
    Activation activation = Activation::relu;

    void validate() const;
    std::size_t input_dim() const { return layer_widths.front(); }
    std::size_t class_count() const { return layer_widths.back(); }
};

std::size_t parameter_count(const MlpArchitecture& arch);

// Parameters are flat, layer by layer: weights row-major (out x in), then
// biases. feature_layer_index names the activation treated as the feature
// vector h: 0 is the raw input, widths.size()-2 the last hidden layer.
struct MlpModel {
    MlpArchitecture architecture;
    Vec parameters;
    std::size_t feature_layer_index = 0;

    void validate() const;
};

struct ForwardRecord {
    Vec features;
    Vec logits;
    // activations[0] is the input; activations.back() aliases the logits.
    std::vector<Vec> activations;
    // Snapshot of the producing model's widths, to reject stale records.
    std::vector<std::size_t> layer_widths;
};

// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] from a SplitMix64
// stream; biases zero. feature_layer_index defaults to the last hidden
// layer (or the input for a single-stage net).
MlpModel init_model(const MlpArchitecture& arch, std::uint64_t seed);
MlpModel init_model(const MlpArchitecture& arch, std::uint64_t seed,
                    std::size_t feature_layer_index);

ForwardRecord forward(const MlpModel& model, std::span<const double> input);

// Pulls an upstream d(loss)/d(logits) back to a flat parameter gradient
// with the same layout as model.parameters.
Vec backward(const MlpModel& model, const ForwardRecord& record,
             const Vec& logit_gradient);

struct SgdConfig {
    double lr = 0.0;
    double momentum = 0.0;
    double weight_decay = 0.0;
};

// v <- momentum*v + g + weight_decay*theta; theta <- theta - lr*v.
// velocity may start empty; it is sized on first use.
void sgd_step(MlpModel& model, const Vec& gradient, const SgdConfig& cfg,
              Vec& velocity);

// Checkpoint: "ICKD" magic, format version u16, layer count u16, widths
// u32 each, feature_layer_index u16, parameters as little-endian f64.
void save_checkpoint(const MlpModel& model, const std::string& path);
MlpModel load_checkpoint(const std::string& path);

} // namespace ickd
