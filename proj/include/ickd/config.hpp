#pragma once

#include "ickd/data.hpp"
#include "ickd/train.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ickd {

enum class DataKind { blobs, spirals, file };

struct DataConfig {
    DataKind kind = DataKind::blobs;
    std::size_t classes = 10;
    std::size_t per_class = 50;
    std::size_t test_per_class = 20;
    std::size_t dim = 8;
    double spread = 0.35;
    double noise = 0.2;
    std::uint64_t seed = 7;
    // 0 derives the train/test split stream from seed.
    std::uint64_t split_seed = 0;
    std::string train_file;
    std::string test_file;
};

struct ModelConfig {
    std::vector<std::size_t> widths;
    // Unset defaults to the last hidden layer.
    std::optional<std::size_t> feature_layer;

    MlpArchitecture architecture() const;
    MlpModel init(std::uint64_t seed) const;
};

struct AblateConfig {
    std::vector<Ablation> rows = {Ablation::kd_only, Ablation::kd_picd,
                                  Ablation::kd_nicd, Ablation::full};
    // Pairs of (use_a_weights, use_b_weights).
    std::vector<std::pair<bool, bool>> weightings = {{true, true}};
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
};

enum class SweepAxis { k_positive, beta1, beta2, gamma_picd, gamma_nicd };

struct SweepConfig {
    SweepAxis axis = SweepAxis::gamma_picd;
    // Kept as written; "all" is valid for the k_positive axis.
    std::vector<std::string> values = {"0", "1", "2", "4", "8"};
    std::vector<std::uint64_t> seeds = {1, 2, 3};
};

struct AppConfig {
    DataConfig data;
    ModelConfig teacher = {{8, 64, 10}, std::nullopt};
    std::string teacher_checkpoint;
    ModelConfig student = {{8, 4, 10}, std::nullopt};
    // Empty widths fall back to student.
    ModelConfig student2;
    TrainConfig train;
    AblateConfig ablate;
    SweepConfig sweep;

    ModelConfig second_student() const {
        return student2.widths.empty() ? student : student2;
    }
};

// Line-oriented `section.key = value`; blank lines and lines starting
// with '#' are skipped; unknown keys, malformed lines, and bad values
// raise ConfigError with 1-based line/column.
AppConfig parse_config_file(const std::string& path);

// `key=value` in the same namespace, applied on top; errors carry
// line 0 and name the override.
void apply_override(AppConfig& cfg, const std::string& assignment);

const char* to_string(DataKind kind);
const char* to_string(SweepAxis axis);

struct DataBundle {
    LabeledDataset train;
    LabeledDataset test;
};

// Generated kinds draw train and test from one pool (shared blob centers/
// spiral arms), split per class by a seeded shuffle; kind=file loads the
// two paths as-is.
DataBundle make_datasets(const DataConfig& cfg);

inline constexpr std::uint64_t kSplitTag = 0x53504C54; // "SPLT"

} // namespace ickd
