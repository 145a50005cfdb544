#pragma once

#include "ickd/data.hpp"
#include "ickd/net.hpp"
#include "ickd/numerics.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ickd {

struct FeatureBank {
    // Row-major, one teacher feature per training sample.
    Vec features;
    std::vector<std::uint16_t> labels;
    std::size_t dim = 0;
    // 0 for a static offline bank; rebuild epoch in online mode.
    std::size_t source_epoch = 0;
    // Cached Euclidean norms, one per row, each > 1e-12.
    Vec row_norms;

    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * dim, dim};
    }
};

enum class Polarity { positive, negative };

struct RetrievalResult {
    std::vector<std::size_t> indices;
    // Nonnegative, sums to 1 over the retrieved set (may have length 1,
    // so it is kept as a plain vector rather than a ProbVector).
    Vec weights;
    Polarity polarity = Polarity::positive;
};

struct RetrievalConfig {
    double beta1 = 1.0;
    double beta2 = 4.0;
    std::size_t k_positive = 100;
    std::size_t n_negative = 8;
    // Alternative weight path: softmax over every masked candidate, then
    // renormalize the retrieved slice. Agrees with the default up to
    // round-off.
    bool softmax_over_all = false;
    // Ablation: sample negatives uniformly instead of taking the most
    // similar different-class rows.
    bool random_negatives = false;

    void validate() const;
};

// Wraps raw rows as a bank; rejects rows with norm <= 1e-12.
FeatureBank make_bank(Vec features, std::vector<std::uint16_t> labels,
                      std::size_t dim, std::size_t source_epoch = 0);

FeatureBank build_bank(const MlpModel& model, const LabeledDataset& dataset,
                       std::size_t source_epoch = 0);

// Entry j = cos(query, row_j) / beta.
Vec similarity_row(const FeatureBank& bank, std::span<const double> query,
                   double beta);

// Top-min(K, candidates) same-label rows by beta1-scaled similarity,
// excluding the query itself; ties broken by lower index; weights are the
// softmax of the selected scaled similarities.
RetrievalResult retrieve_positive(const FeatureBank& bank,
                                  std::size_t query_index,
                                  const RetrievalConfig& cfg);

// Top-min(N_neg, candidates) different-label rows by beta2-scaled
// similarity. epoch_seed only feeds the random_negatives ablation; the
// default ranking is deterministic for a fixed bank.
RetrievalResult retrieve_negative(const FeatureBank& bank,
                                  std::size_t query_index,
                                  const RetrievalConfig& cfg,
                                  std::uint64_t epoch_seed);

// Per-epoch negative selections, filled lazily and fixed for the epoch.
class NegativeCache {
  public:
    NegativeCache(const FeatureBank& bank, const RetrievalConfig& cfg,
                  std::uint64_t epoch_seed);

    const RetrievalResult& get(std::size_t query_index);
    std::uint64_t epoch_seed() const { return epoch_seed_; }

  private:
    const FeatureBank* bank_;
    RetrievalConfig cfg_;
    std::uint64_t epoch_seed_;
    std::vector<std::optional<RetrievalResult>> slots_;
};

ProbVector aggregate_predictions(const MlpModel& teacher,
                                 const LabeledDataset& bank_dataset,
                                 const RetrievalResult& result, double tau1);

// Same aggregation over precomputed softened predictions (row-major
// N x class_count).
ProbVector aggregate_predictions(const Vec& softened_predictions,
                                 std::size_t class_count,
                                 const RetrievalResult& result);

// Tab.-style weighting ablation: keep the indices, level the weights.
RetrievalResult with_uniform_weights(RetrievalResult result);

std::uint64_t bank_checksum(const FeatureBank& bank);

// Bank dump: magic "ICKB", N u32, D u32, features little-endian f64
// row-major, labels u16.
void save_bank(const FeatureBank& bank, const std::string& path);
FeatureBank load_bank(const std::string& path);

} // namespace ickd
