#pragma once

#include "ickd/bank.hpp"
#include "ickd/data.hpp"
#include "ickd/error.hpp"
#include "ickd/losses.hpp"
#include "ickd/net.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ickd {

enum class TrainMode { offline, online, teacher_free, ce_only };

enum class Ablation { none, kd_only, kd_picd, kd_nicd, full, ickd_all };

const char* to_string(TrainMode mode);
const char* to_string(Ablation ablation);

struct LrSchedule {
    double initial = 0.05;
    std::vector<std::size_t> decay_epochs = {30, 45};
    double decay_factor = 0.1;

    void validate() const;
    // Learning rate for a 1-indexed epoch: one decay per threshold passed.
    double at(std::size_t epoch) const;
};

struct TrainConfig {
    std::size_t epochs = 60;
    std::size_t batch_size = 64;
    LrSchedule lr;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    std::uint64_t seed = 1;
    LossConfig loss;
    RetrievalConfig retrieval;
    TrainMode mode = TrainMode::offline;
    Ablation ablation = Ablation::none;
    // Online mode: also give student 1 in-context terms from a bank built
    // on student 2. Off by default; the bank canonically follows student 1.
    bool mirror_in_context = false;
    // Online per-student init seeds; 0 derives them from seed.
    std::uint64_t seed1 = 0;
    std::uint64_t seed2 = 0;

    void validate() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double ce = 0.0;
    double kd = 0.0;
    double picd = 0.0;
    double nicd = 0.0;
    double total = 0.0;
    double train_acc = 0.0;
    double test_acc = 0.0;
    std::uint64_t bank_checksum = 0;
    // Kept in memory for reporting; serialized as 0 so metrics files stay
    // byte-identical across reruns.
    double wall_ms = 0.0;
};

struct RunMetrics {
    std::vector<EpochRecord> epochs;
    double final_test_acc = 0.0;

    // Header epoch,ce,kd,picd,nicd,total,train_acc,test_acc,bank_checksum,
    // wall_ms; doubles in shortest round-trip form, checksums as 16 hex
    // digits, wall_ms as 0; trailing "#final test_acc=<v>" line.
    std::string to_csv() const;
};

struct TrainResult {
    MlpModel model;
    RunMetrics metrics;
};

struct OnlineResult {
    MlpModel model1;
    MlpModel model2;
    RunMetrics metrics1;
    RunMetrics metrics2;
    std::size_t bank_rebuilds = 0;
};

struct TeacherFreeResult {
    MlpModel baseline;
    MlpModel student;
    RunMetrics baseline_metrics;
    RunMetrics student_metrics;
};

// Divergence (non-finite loss or gradient) mid-run.
class TrainAbort : public NumericInstability {
  public:
    TrainAbort(const std::string& what, RunMetrics partial)
        : NumericInstability(what), partial_metrics(std::move(partial)) {}

    RunMetrics partial_metrics;
};

// Top-1 accuracy; argmax ties resolve to the lower class index.
double evaluate(const MlpModel& model, const LabeledDataset& dataset);

TrainResult train_teacher(const MlpArchitecture& arch,
                          const LabeledDataset& train,
                          const LabeledDataset& test, const TrainConfig& cfg);

TrainResult distill_offline(const MlpModel& teacher,
                            const MlpArchitecture& student_arch,
                            const LabeledDataset& train,
                            const LabeledDataset& test, const TrainConfig& cfg);

OnlineResult distill_online(const MlpArchitecture& arch1,
                            const MlpArchitecture& arch2,
                            const LabeledDataset& train,
                            const LabeledDataset& test, const TrainConfig& cfg);

TeacherFreeResult distill_teacher_free(const MlpArchitecture& arch,
                                       const LabeledDataset& train,
                                       const LabeledDataset& test,
                                       const TrainConfig& cfg);

// Seed-stream tags: a run derives its model-init, per-epoch shuffle, and
// per-epoch negative-refresh streams from mix_seed chains on these.
inline constexpr std::uint64_t kInitTag = 0x494E4954;     // "INIT"
inline constexpr std::uint64_t kShuffleTag = 0x53485546;  // "SHUF"
inline constexpr std::uint64_t kNegativeTag = 0x4E454753; // "NEGS"
inline constexpr std::uint64_t kStudent1Tag = 0x5331;     // "S1"
inline constexpr std::uint64_t kStudent2Tag = 0x5332;     // "S2"

} // namespace ickd
