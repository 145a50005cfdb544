#include "ickd/bank.hpp"

#include "ickd/checksum.hpp"
#include "ickd/error.hpp"
#include "ickd/kernels.hpp"
#include "ickd/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

namespace ickd {

namespace {

constexpr char kBankMagic[4] = {'I', 'C', 'K', 'B'};

Vec compute_row_norms(const Vec& features, std::size_t n, std::size_t dim) {
    const auto& ops = kernels::active();
    Vec norms(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = features.data() + i * dim;
        norms[i] = std::sqrt(ops.dot(row, row, dim));
    }
    return norms;
}

// Descending similarity, ascending index on ties.
struct RankBefore {
    const Vec& sims;
    bool operator()(std::size_t a, std::size_t b) const {
        if (sims[a] != sims[b]) return sims[a] > sims[b];
        return a < b;
    }
};

Vec selection_weights(const Vec& sims, const std::vector<std::size_t>& candidates,
                      const std::vector<std::size_t>& selected,
                      bool softmax_over_all) {
    // A lone candidate gets weight 1 exactly on either path.
    if (candidates.size() == 1) return Vec{1.0};
    if (!softmax_over_all) {
        if (selected.size() == 1) return Vec{1.0};
        Vec selected_sims(selected.size());
        for (std::size_t i = 0; i < selected.size(); ++i) {
            selected_sims[i] = sims[selected[i]];
        }
        return softmax_with_temperature(selected_sims, 1.0).values();
    }

    Vec all_sims(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        all_sims[i] = sims[candidates[i]];
    }
    const Vec full = softmax_with_temperature(all_sims, 1.0).values();

    Vec weights(selected.size());
    double total = 0.0;
    for (std::size_t i = 0; i < selected.size(); ++i) {
        const auto pos = std::size_t(
            std::find(candidates.begin(), candidates.end(), selected[i]) -
            candidates.begin());
        weights[i] = full[pos];
        total += weights[i];
    }
    if (total <= 0.0) throw NumericInstability("retrieval weights underflowed to zero");
    for (double& w : weights) w /= total;
    return weights;
}

RetrievalResult retrieve(const FeatureBank& bank, std::size_t query_index,
                         const RetrievalConfig& cfg, Polarity polarity,
                         std::uint64_t epoch_seed) {
    cfg.validate();
    if (query_index >= bank.size()) {
        throw InvalidArgument("query index out of range");
    }

    const std::uint16_t query_label = bank.labels[query_index];
    std::vector<std::size_t> candidates;
    candidates.reserve(bank.size());
    for (std::size_t j = 0; j < bank.size(); ++j) {
        const bool same = bank.labels[j] == query_label;
        if (polarity == Polarity::positive ? (same && j != query_index) : !same) {
            candidates.push_back(j);
        }
    }
    if (candidates.empty()) {
        throw InsufficientCandidates(
            polarity == Polarity::positive
                ? "no same-class candidate for sample " + std::to_string(query_index)
                : "no different-class candidate for sample " +
                      std::to_string(query_index));
    }

    const double beta = polarity == Polarity::positive ? cfg.beta1 : cfg.beta2;
    const Vec sims = similarity_row(bank, bank.row(query_index), beta);

    const std::size_t want = polarity == Polarity::positive ? cfg.k_positive
                                                            : cfg.n_negative;
    const std::size_t take = std::min(want, candidates.size());

    std::vector<std::size_t> selected;
    if (polarity == Polarity::negative && cfg.random_negatives) {
        SplitMix64 rng(mix_seed(epoch_seed, query_index));
        std::vector<std::size_t> pool = candidates;
        for (std::size_t i = 0; i < take; ++i) {
            const std::size_t pick = i + std::size_t(rng.next_below(pool.size() - i));
            std::swap(pool[i], pool[pick]);
        }
        selected.assign(pool.begin(), pool.begin() + std::ptrdiff_t(take));
        std::sort(selected.begin(), selected.end(), RankBefore{sims});
    } else {
        selected = candidates;
        std::partial_sort(selected.begin(), selected.begin() + std::ptrdiff_t(take),
                          selected.end(), RankBefore{sims});
        selected.resize(take);
    }

    RetrievalResult result;
    result.polarity = polarity;
    result.indices = selected;
    result.weights = selection_weights(sims, candidates, selected,
                                       cfg.softmax_over_all);
    return result;
}

} // namespace

void RetrievalConfig::validate() const {
    if (!(beta1 > 0.0) || !(beta2 > 0.0)) {
        throw InvalidArgument("retrieval temperatures must be positive");
    }
    if (k_positive < 1) throw InvalidArgument("k_positive must be at least 1");
    if (n_negative < 1) throw InvalidArgument("n_negative must be at least 1");
}

FeatureBank make_bank(Vec features, std::vector<std::uint16_t> labels,
                      std::size_t dim, std::size_t source_epoch) {
    if (labels.empty()) throw InvalidArgument("bank is empty");
    if (dim == 0) throw InvalidArgument("bank dimension is zero");
    if (features.size() != labels.size() * dim) {
        throw InvalidArgument("bank matrix shape does not match labels");
    }
    if (!all_finite(features)) throw InvalidArgument("bank has non-finite features");

    FeatureBank bank;
    bank.features = std::move(features);
    bank.labels = std::move(labels);
    bank.dim = dim;
    bank.source_epoch = source_epoch;
    bank.row_norms = compute_row_norms(bank.features, bank.size(), dim);
    for (std::size_t i = 0; i < bank.size(); ++i) {
        if (bank.row_norms[i] <= kNormFloor) {
            throw DegenerateVector("bank row " + std::to_string(i) +
                                   " has near-zero norm");
        }
    }
    return bank;
}

FeatureBank build_bank(const MlpModel& model, const LabeledDataset& dataset,
                       std::size_t source_epoch) {
    dataset.validate();
    model.validate();
    if (model.architecture.input_dim() != dataset.dim) {
        throw InvalidArgument("model input width does not match dataset");
    }

    const std::size_t feature_dim =
        model.architecture.layer_widths[model.feature_layer_index];
    Vec features(dataset.sample_count() * feature_dim);
    for (std::size_t i = 0; i < dataset.sample_count(); ++i) {
        const ForwardRecord record = forward(model, dataset.row(i));
        std::copy(record.features.begin(), record.features.end(),
                  features.begin() + std::ptrdiff_t(i * feature_dim));
    }
    try {
        return make_bank(std::move(features), dataset.labels, feature_dim,
                         source_epoch);
    } catch (const DegenerateVector& e) {
        throw DegenerateVector(std::string(e.what()) +
                               " (feature extractor output collapsed)");
    }
}

Vec similarity_row(const FeatureBank& bank, std::span<const double> query,
                   double beta) {
    if (!(beta > 0.0)) throw InvalidArgument("similarity beta must be positive");
    if (query.size() != bank.dim) {
        throw InvalidArgument("query dimension does not match bank");
    }
    const auto& ops = kernels::active();
    const double query_norm = std::sqrt(ops.dot(query.data(), query.data(),
                                                query.size()));
    if (query_norm <= kNormFloor) {
        throw DegenerateVector("similarity query has near-zero norm");
    }

    Vec sims(bank.size());
    for (std::size_t j = 0; j < bank.size(); ++j) {
        const double raw = ops.dot(query.data(), bank.features.data() + j * bank.dim,
                                   bank.dim) /
                           (query_norm * bank.row_norms[j]);
        sims[j] = std::clamp(raw, -1.0, 1.0) / beta;
    }
    return sims;
}

RetrievalResult retrieve_positive(const FeatureBank& bank,
                                  std::size_t query_index,
                                  const RetrievalConfig& cfg) {
    return retrieve(bank, query_index, cfg, Polarity::positive, 0);
}

RetrievalResult retrieve_negative(const FeatureBank& bank,
                                  std::size_t query_index,
                                  const RetrievalConfig& cfg,
                                  std::uint64_t epoch_seed) {
    return retrieve(bank, query_index, cfg, Polarity::negative, epoch_seed);
}

NegativeCache::NegativeCache(const FeatureBank& bank, const RetrievalConfig& cfg,
                             std::uint64_t epoch_seed)
    : bank_(&bank), cfg_(cfg), epoch_seed_(epoch_seed), slots_(bank.size()) {}

const RetrievalResult& NegativeCache::get(std::size_t query_index) {
    if (query_index >= slots_.size()) {
        throw InvalidArgument("query index out of range");
    }
    auto& slot = slots_[query_index];
    if (!slot) slot = retrieve_negative(*bank_, query_index, cfg_, epoch_seed_);
    return *slot;
}

ProbVector aggregate_predictions(const MlpModel& teacher,
                                 const LabeledDataset& bank_dataset,
                                 const RetrievalResult& result, double tau1) {
    if (result.polarity != Polarity::positive) {
        throw InvalidArgument("aggregation requires a positive retrieval result");
    }
    if (!(tau1 > 0.0)) throw InvalidArgument("tau1 must be positive");

    const std::size_t k = teacher.architecture.class_count();
    Vec mixed(k, 0.0);
    const auto& ops = kernels::active();
    for (std::size_t i = 0; i < result.indices.size(); ++i) {
        const std::size_t j = result.indices[i];
        if (j >= bank_dataset.sample_count()) {
            throw InvalidArgument("retrieved index outside bank dataset");
        }
        const ProbVector softened = softmax_with_temperature(
            forward(teacher, bank_dataset.row(j)).logits, tau1);
        ops.axpy(result.weights[i], softened.values().data(), mixed.data(), k);
    }
    return ProbVector(std::move(mixed));
}

ProbVector aggregate_predictions(const Vec& softened_predictions,
                                 std::size_t class_count,
                                 const RetrievalResult& result) {
    if (result.polarity != Polarity::positive) {
        throw InvalidArgument("aggregation requires a positive retrieval result");
    }
    Vec mixed(class_count, 0.0);
    const auto& ops = kernels::active();
    for (std::size_t i = 0; i < result.indices.size(); ++i) {
        const std::size_t offset = result.indices[i] * class_count;
        if (offset + class_count > softened_predictions.size()) {
            throw InvalidArgument("retrieved index outside prediction matrix");
        }
        ops.axpy(result.weights[i], softened_predictions.data() + offset,
                 mixed.data(), class_count);
    }
    return ProbVector(std::move(mixed));
}

RetrievalResult with_uniform_weights(RetrievalResult result) {
    const double w = 1.0 / double(result.indices.size());
    result.weights.assign(result.indices.size(), w);
    return result;
}

std::uint64_t bank_checksum(const FeatureBank& bank) {
    Fnv1a64 hash;
    hash.update_u64(bank.size());
    hash.update_u64(bank.dim);
    hash.update_f64(bank.features);
    hash.update(bank.labels.data(), bank.labels.size() * sizeof(std::uint16_t));
    return hash.digest();
}

void save_bank(const FeatureBank& bank, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open bank dump for writing: " + path);

    out.write(kBankMagic, 4);
    const std::uint32_t n = std::uint32_t(bank.size());
    const std::uint32_t dim = std::uint32_t(bank.dim);
    out.write(reinterpret_cast<const char*>(&n), 4);
    out.write(reinterpret_cast<const char*>(&dim), 4);
    out.write(reinterpret_cast<const char*>(bank.features.data()),
              std::streamsize(bank.features.size() * sizeof(double)));
    out.write(reinterpret_cast<const char*>(bank.labels.data()),
              std::streamsize(bank.labels.size() * sizeof(std::uint16_t)));
    out.flush();
    if (!out) throw Error("write failed for bank dump: " + path);
}

FeatureBank load_bank(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open bank dump: " + path);

    std::size_t offset = 0;
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kBankMagic, 4) != 0) {
        throw FormatError("bank dump magic mismatch", 0);
    }
    offset += 4;

    auto read_or_throw = [&](void* data, std::size_t bytes, const char* field) {
        in.read(static_cast<char*>(data), std::streamsize(bytes));
        if (!in) {
            throw FormatError(std::string("bank dump truncated reading ") + field,
                              offset);
        }
        offset += bytes;
    };

    std::uint32_t n = 0;
    std::uint32_t dim = 0;
    read_or_throw(&n, 4, "row count");
    read_or_throw(&dim, 4, "feature dimension");

    Vec features(std::size_t(n) * dim);
    std::vector<std::uint16_t> labels(n);
    read_or_throw(features.data(), features.size() * sizeof(double), "features");
    read_or_throw(labels.data(), labels.size() * sizeof(std::uint16_t), "labels");

    in.peek();
    if (!in.eof()) throw FormatError("trailing bytes after bank payload", offset);
    return make_bank(std::move(features), std::move(labels), dim);
}

} // namespace ickd
