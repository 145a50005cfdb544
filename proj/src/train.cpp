#include "ickd/train.hpp"

#include "ickd/checksum.hpp"
#include "ickd/kernels.hpp"
#include "ickd/rng.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <numeric>
#include <optional>
#include <utility>

namespace ickd {

namespace {

std::string format_double(double v) {
    char buf[32];
    const auto result = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, result.ptr);
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t shuffle_base,
                                     std::size_t epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t(0));
    SplitMix64 rng(mix_seed(shuffle_base, epoch));
    shuffle(order, rng);
    return order;
}

struct LossTally {
    double ce = 0.0;
    double kd = 0.0;
    double picd = 0.0;
    double nicd = 0.0;
    double total = 0.0;
    std::size_t count = 0;

    void add(const TotalLossBreakdown& b) {
        ce += b.ce;
        kd += b.kd;
        picd += b.picd;
        nicd += b.nicd;
        total += b.total;
        ++count;
    }

    void fill(EpochRecord& rec) const {
        const double n = double(count);
        rec.ce = ce / n;
        rec.kd = kd / n;
        rec.picd = picd / n;
        rec.nicd = nicd / n;
        rec.total = total / n;
    }
};

LossConfig effective_loss(const TrainConfig& cfg) {
    LossConfig loss = cfg.loss;
    switch (cfg.ablation) {
    case Ablation::kd_only:
        loss.gamma_picd = 0.0;
        loss.gamma_nicd = 0.0;
        break;
    case Ablation::kd_picd:
        loss.gamma_nicd = 0.0;
        break;
    case Ablation::kd_nicd:
        loss.gamma_picd = 0.0;
        break;
    default:
        break;
    }
    return loss;
}

RetrievalConfig effective_retrieval(const TrainConfig& cfg,
                                    std::size_t bank_size) {
    RetrievalConfig r = cfg.retrieval;
    if (cfg.ablation == Ablation::ickd_all) r.k_positive = bank_size;
    return r;
}

void check_positive_feasible(const LabeledDataset& ds) {
    const auto hist = ds.class_histogram();
    std::string offenders;
    for (std::size_t i = 0; i < ds.sample_count(); ++i) {
        if (hist[ds.labels[i]] == 1) {
            if (!offenders.empty()) offenders += ", ";
            offenders += std::to_string(i);
        }
    }
    if (!offenders.empty()) {
        throw InsufficientCandidates("samples without a same-class peer: " +
                                     offenders);
    }
}

void check_negative_feasible(const LabeledDataset& ds) {
    const auto hist = ds.class_histogram();
    std::size_t populated = 0;
    for (std::size_t c : hist) populated += c > 0 ? 1 : 0;
    if (populated < 2) {
        throw InsufficientCandidates(
            "negative retrieval needs at least two populated classes");
    }
}

void check_shapes(const MlpArchitecture& arch, const LabeledDataset& train,
                  const LabeledDataset& test) {
    if (arch.input_dim() != train.dim || arch.input_dim() != test.dim) {
        throw InvalidArgument("architecture input width does not match data");
    }
    if (arch.class_count() != train.class_count ||
        arch.class_count() != test.class_count) {
        throw InvalidArgument("architecture class count does not match data");
    }
}

std::vector<Vec> logit_rows(const MlpModel& model, const LabeledDataset& ds) {
    std::vector<Vec> rows;
    rows.reserve(ds.sample_count());
    for (std::size_t i = 0; i < ds.sample_count(); ++i) {
        rows.push_back(forward(model, ds.row(i)).logits);
    }
    return rows;
}

Vec softened_matrix(const std::vector<Vec>& logits, double tau) {
    const std::size_t k = logits.front().size();
    Vec matrix(logits.size() * k);
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const ProbVector soft = softmax_with_temperature(logits[i], tau);
        std::copy(soft.values().begin(), soft.values().end(),
                  matrix.begin() + std::ptrdiff_t(i * k));
    }
    return matrix;
}

std::vector<ProbVector> gather_probs(const Vec& matrix, std::size_t k,
                                     const std::vector<std::size_t>& indices) {
    std::vector<ProbVector> out;
    out.reserve(indices.size());
    for (std::size_t j : indices) {
        out.emplace_back(Vec(matrix.begin() + std::ptrdiff_t(j * k),
                             matrix.begin() + std::ptrdiff_t((j + 1) * k)));
    }
    return out;
}

std::vector<ProbVector> aggregate_all(const FeatureBank& bank,
                                      const RetrievalConfig& rcfg,
                                      const Vec& softened, std::size_t k,
                                      bool use_a_weights) {
    std::vector<ProbVector> out;
    out.reserve(bank.size());
    for (std::size_t i = 0; i < bank.size(); ++i) {
        RetrievalResult result = retrieve_positive(bank, i, rcfg);
        if (!use_a_weights) result = with_uniform_weights(std::move(result));
        out.push_back(aggregate_predictions(softened, k, result));
    }
    return out;
}

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start)
        .count();
}

// One student's per-epoch in-context context: the bank plus the teacher
// predictions frozen at the epoch start.
struct InContextState {
    FeatureBank bank;
    std::uint64_t checksum = 0;
    RetrievalConfig rcfg;
    std::vector<ProbVector> aggregated;
    Vec nicd_matrix;
    std::optional<NegativeCache> negatives;
};

// Fills in place: the negative cache points at state.bank, so the state
// must already sit at its final address.
void fill_in_context(InContextState& state, const MlpModel& feature_model,
                     const std::vector<Vec>& teacher_logits,
                     const LabeledDataset& train, const TrainConfig& cfg,
                     const LossConfig& loss, std::size_t epoch,
                     std::uint64_t negative_base) {
    state.bank = build_bank(feature_model, train, epoch);
    state.checksum = bank_checksum(state.bank);
    state.rcfg = effective_retrieval(cfg, state.bank.size());
    const std::size_t k = train.class_count;
    if (loss.gamma_picd > 0.0) {
        state.aggregated =
            aggregate_all(state.bank, state.rcfg,
                          softened_matrix(teacher_logits, loss.tau1), k,
                          loss.use_a_weights);
    }
    if (loss.gamma_nicd > 0.0) {
        state.nicd_matrix = softened_matrix(teacher_logits, loss.tau_nicd);
        state.negatives.emplace(state.bank, state.rcfg,
                                mix_seed(negative_base, epoch));
    }
}

} // namespace

const char* to_string(TrainMode mode) {
    switch (mode) {
    case TrainMode::offline: return "offline";
    case TrainMode::online: return "online";
    case TrainMode::teacher_free: return "teacher_free";
    case TrainMode::ce_only: return "ce_only";
    }
    return "unknown";
}

const char* to_string(Ablation ablation) {
    switch (ablation) {
    case Ablation::none: return "none";
    case Ablation::kd_only: return "kd_only";
    case Ablation::kd_picd: return "kd_picd";
    case Ablation::kd_nicd: return "kd_nicd";
    case Ablation::full: return "full";
    case Ablation::ickd_all: return "ickd_all";
    }
    return "unknown";
}

void LrSchedule::validate() const {
    if (!(initial > 0.0)) throw InvalidArgument("initial lr must be positive");
    if (!(decay_factor > 0.0 && decay_factor <= 1.0)) {
        throw InvalidArgument("lr decay factor must lie in (0, 1]");
    }
}

double LrSchedule::at(std::size_t epoch) const {
    double lr = initial;
    for (std::size_t boundary : decay_epochs) {
        if (epoch > boundary) lr *= decay_factor;
    }
    return lr;
}

void TrainConfig::validate() const {
    if (epochs < 1) throw InvalidArgument("epochs must be at least 1");
    if (batch_size < 1) throw InvalidArgument("batch size must be at least 1");
    lr.validate();
    if (!(momentum >= 0.0 && momentum < 1.0)) {
        throw InvalidArgument("momentum must lie in [0, 1)");
    }
    if (!(weight_decay >= 0.0)) {
        throw InvalidArgument("weight decay must be nonnegative");
    }
    loss.validate();
    retrieval.validate();
}

std::string RunMetrics::to_csv() const {
    std::string out =
        "epoch,ce,kd,picd,nicd,total,train_acc,test_acc,bank_checksum,wall_ms\n";
    for (const EpochRecord& rec : epochs) {
        out += std::to_string(rec.epoch);
        for (double v : {rec.ce, rec.kd, rec.picd, rec.nicd, rec.total,
                         rec.train_acc, rec.test_acc}) {
            out += ',';
            out += format_double(v);
        }
        out += ',';
        out += to_hex(rec.bank_checksum);
        out += ",0\n";
    }
    out += "#final test_acc=" + format_double(final_test_acc) + "\n";
    return out;
}

double evaluate(const MlpModel& model, const LabeledDataset& dataset) {
    dataset.validate();
    model.validate();
    if (model.architecture.input_dim() != dataset.dim ||
        model.architecture.class_count() != dataset.class_count) {
        throw InvalidArgument("model shape does not match dataset");
    }

    std::size_t correct = 0;
    for (std::size_t i = 0; i < dataset.sample_count(); ++i) {
        const Vec logits = forward(model, dataset.row(i)).logits;
        std::size_t best = 0;
        for (std::size_t k = 1; k < logits.size(); ++k) {
            if (logits[k] > logits[best]) best = k;
        }
        if (best == dataset.labels[i]) ++correct;
    }
    return double(correct) / double(dataset.sample_count());
}

TrainResult train_teacher(const MlpArchitecture& arch,
                          const LabeledDataset& train,
                          const LabeledDataset& test, const TrainConfig& cfg) {
    cfg.validate();
    if (cfg.mode != TrainMode::ce_only) {
        throw InvalidArgument("train_teacher requires mode ce_only");
    }
    train.validate();
    test.validate();
    check_shapes(arch, train, test);

    MlpModel model = init_model(arch, mix_seed(cfg.seed, kInitTag));
    Vec velocity;
    Vec batch_grad(model.parameters.size());
    const std::uint64_t shuffle_base = mix_seed(cfg.seed, kShuffleTag);
    RunMetrics metrics;

    try {
        for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
            const auto start = std::chrono::steady_clock::now();
            const SgdConfig sgd{cfg.lr.at(epoch), cfg.momentum,
                                cfg.weight_decay};
            const auto order =
                epoch_order(train.sample_count(), shuffle_base, epoch);
            LossTally tally;

            for (std::size_t begin = 0; begin < order.size();
                 begin += cfg.batch_size) {
                const std::size_t end =
                    std::min(begin + cfg.batch_size, order.size());
                batch_grad.assign(batch_grad.size(), 0.0);
                for (std::size_t pos = begin; pos < end; ++pos) {
                    const std::size_t idx = order[pos];
                    const ForwardRecord rec = forward(model, train.row(idx));
                    const TotalLossBreakdown breakdown =
                        total_loss(train.labels[idx], rec.logits, nullptr,
                                   nullptr, nullptr, nullptr, cfg.loss);
                    if (!std::isfinite(breakdown.total)) {
                        throw TrainAbort("non-finite loss at epoch " +
                                             std::to_string(epoch) +
                                             " sample " + std::to_string(idx),
                                         metrics);
                    }
                    tally.add(breakdown);
                    const Vec grad =
                        backward(model, rec, breakdown.logit_gradient);
                    kernels::active().axpy(1.0, grad.data(), batch_grad.data(),
                                           grad.size());
                }
                const double scale = 1.0 / double(end - begin);
                for (double& g : batch_grad) g *= scale;
                if (!all_finite(batch_grad)) {
                    throw TrainAbort("non-finite gradient at epoch " +
                                         std::to_string(epoch),
                                     metrics);
                }
                sgd_step(model, batch_grad, sgd, velocity);
            }

            EpochRecord rec;
            rec.epoch = epoch;
            tally.fill(rec);
            rec.train_acc = evaluate(model, train);
            rec.test_acc = evaluate(model, test);
            rec.bank_checksum = 0;
            rec.wall_ms = elapsed_ms(start);
            metrics.epochs.push_back(rec);
        }
    } catch (const TrainAbort&) {
        throw;
    } catch (const NumericInstability& e) {
        throw TrainAbort(e.what(), metrics);
    }
    metrics.final_test_acc = metrics.epochs.back().test_acc;
    return {std::move(model), std::move(metrics)};
}

TrainResult distill_offline(const MlpModel& teacher,
                            const MlpArchitecture& student_arch,
                            const LabeledDataset& train,
                            const LabeledDataset& test, const TrainConfig& cfg) {
    cfg.validate();
    if (cfg.mode != TrainMode::offline) {
        throw InvalidArgument("distill_offline requires mode offline");
    }
    train.validate();
    test.validate();
    teacher.validate();
    check_shapes(student_arch, train, test);
    check_shapes(teacher.architecture, train, test);

    const LossConfig loss = effective_loss(cfg);
    const bool want_picd = loss.gamma_picd > 0.0;
    const bool want_nicd = loss.gamma_nicd > 0.0;
    if (want_picd) check_positive_feasible(train);
    if (want_nicd) check_negative_feasible(train);

    const std::size_t k = train.class_count;
    const std::vector<Vec> teacher_rows = logit_rows(teacher, train);

    // Static teacher: the bank, the positive aggregates, and every teacher
    // prediction are fixed for the whole run.
    std::optional<FeatureBank> bank;
    std::uint64_t checksum = 0;
    RetrievalConfig rcfg = cfg.retrieval;
    std::vector<ProbVector> aggregated;
    Vec nicd_matrix;
    if (want_picd || want_nicd) {
        bank = build_bank(teacher, train);
        checksum = bank_checksum(*bank);
        rcfg = effective_retrieval(cfg, bank->size());
        if (want_picd) {
            aggregated = aggregate_all(*bank, rcfg,
                                       softened_matrix(teacher_rows, loss.tau1),
                                       k, loss.use_a_weights);
        }
        if (want_nicd) nicd_matrix = softened_matrix(teacher_rows, loss.tau_nicd);
    }

    MlpModel student = init_model(student_arch, mix_seed(cfg.seed, kInitTag));
    Vec velocity;
    Vec batch_grad(student.parameters.size());
    const std::uint64_t shuffle_base = mix_seed(cfg.seed, kShuffleTag);
    const std::uint64_t negative_base = mix_seed(cfg.seed, kNegativeTag);
    RunMetrics metrics;

    try {
        for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
            const auto start = std::chrono::steady_clock::now();
            const SgdConfig sgd{cfg.lr.at(epoch), cfg.momentum,
                                cfg.weight_decay};
            const auto order =
                epoch_order(train.sample_count(), shuffle_base, epoch);
            std::optional<NegativeCache> negatives;
            if (want_nicd) {
                negatives.emplace(*bank, rcfg, mix_seed(negative_base, epoch));
            }
            LossTally tally;

            for (std::size_t begin = 0; begin < order.size();
                 begin += cfg.batch_size) {
                const std::size_t end =
                    std::min(begin + cfg.batch_size, order.size());
                batch_grad.assign(batch_grad.size(), 0.0);
                for (std::size_t pos = begin; pos < end; ++pos) {
                    const std::size_t idx = order[pos];
                    const ForwardRecord rec = forward(student, train.row(idx));

                    std::vector<ProbVector> negative_probs;
                    const Vec* b_weights = nullptr;
                    if (want_nicd) {
                        const RetrievalResult& result = negatives->get(idx);
                        negative_probs =
                            gather_probs(nicd_matrix, k, result.indices);
                        b_weights = &result.weights;
                    }
                    const TotalLossBreakdown breakdown = total_loss(
                        train.labels[idx], rec.logits, &teacher_rows[idx],
                        want_picd ? &aggregated[idx] : nullptr,
                        want_nicd ? &negative_probs : nullptr, b_weights,
                        loss);
                    if (!std::isfinite(breakdown.total)) {
                        throw TrainAbort("non-finite loss at epoch " +
                                             std::to_string(epoch) +
                                             " sample " + std::to_string(idx),
                                         metrics);
                    }
                    tally.add(breakdown);
                    const Vec grad =
                        backward(student, rec, breakdown.logit_gradient);
                    kernels::active().axpy(1.0, grad.data(), batch_grad.data(),
                                           grad.size());
                }
                const double scale = 1.0 / double(end - begin);
                for (double& g : batch_grad) g *= scale;
                if (!all_finite(batch_grad)) {
                    throw TrainAbort("non-finite gradient at epoch " +
                                         std::to_string(epoch),
                                     metrics);
                }
                sgd_step(student, batch_grad, sgd, velocity);
            }

            EpochRecord rec;
            rec.epoch = epoch;
            tally.fill(rec);
            rec.train_acc = evaluate(student, train);
            rec.test_acc = evaluate(student, test);
            rec.bank_checksum = checksum;
            rec.wall_ms = elapsed_ms(start);
            metrics.epochs.push_back(rec);
        }
    } catch (const TrainAbort&) {
        throw;
    } catch (const NumericInstability& e) {
        throw TrainAbort(e.what(), metrics);
    }
    metrics.final_test_acc = metrics.epochs.back().test_acc;
    return {std::move(student), std::move(metrics)};
}

OnlineResult distill_online(const MlpArchitecture& arch1,
                            const MlpArchitecture& arch2,
                            const LabeledDataset& train,
                            const LabeledDataset& test, const TrainConfig& cfg) {
    cfg.validate();
    if (cfg.mode != TrainMode::online) {
        throw InvalidArgument("distill_online requires mode online");
    }
    train.validate();
    test.validate();
    check_shapes(arch1, train, test);
    check_shapes(arch2, train, test);

    const LossConfig loss = effective_loss(cfg);
    const bool want_picd = loss.gamma_picd > 0.0;
    const bool want_nicd = loss.gamma_nicd > 0.0;
    if (want_picd) check_positive_feasible(train);
    if (want_nicd) check_negative_feasible(train);

    const std::uint64_t seed1 =
        cfg.seed1 != 0 ? cfg.seed1 : mix_seed(cfg.seed, kStudent1Tag);
    const std::uint64_t seed2 =
        cfg.seed2 != 0 ? cfg.seed2 : mix_seed(cfg.seed, kStudent2Tag);
    MlpModel student1 = init_model(arch1, mix_seed(seed1, kInitTag));
    MlpModel student2 = init_model(arch2, mix_seed(seed2, kInitTag));
    Vec velocity1;
    Vec velocity2;
    Vec batch_grad1(student1.parameters.size());
    Vec batch_grad2(student2.parameters.size());
    const std::uint64_t shuffle_base = mix_seed(cfg.seed, kShuffleTag);
    const std::uint64_t negative_base = mix_seed(cfg.seed, kNegativeTag);
    const std::size_t k = train.class_count;

    RunMetrics metrics1;
    RunMetrics metrics2;
    std::size_t bank_rebuilds = 0;

    try {
        for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
            const auto start = std::chrono::steady_clock::now();
            const SgdConfig sgd{cfg.lr.at(epoch), cfg.momentum, cfg.weight_decay};

            // Epoch-start snapshots: the bank follows student 1, and the
            // in-context teacher signal for student 2 is student 1's
            // predictions frozen here. Peer logits inside the batch stay live.
            const std::vector<Vec> snap1 = logit_rows(student1, train);
            InContextState ctx1;
            fill_in_context(ctx1, student1, snap1, train, cfg, loss, epoch,
                            negative_base);
            ++bank_rebuilds;

            std::optional<InContextState> ctx2;
            if (cfg.mirror_in_context) {
                const std::vector<Vec> snap2 = logit_rows(student2, train);
                ctx2.emplace();
                fill_in_context(*ctx2, student2, snap2, train, cfg, loss,
                                epoch, negative_base);
            }

            const auto order = epoch_order(train.sample_count(), shuffle_base, epoch);
            LossTally tally1;
            LossTally tally2;

            for (std::size_t begin = 0; begin < order.size();
                 begin += cfg.batch_size) {
                const std::size_t end = std::min(begin + cfg.batch_size, order.size());
                batch_grad1.assign(batch_grad1.size(), 0.0);
                batch_grad2.assign(batch_grad2.size(), 0.0);
                for (std::size_t pos = begin; pos < end; ++pos) {
                    const std::size_t idx = order[pos];
                    const std::size_t y = train.labels[idx];
                    const ForwardRecord rec1 = forward(student1, train.row(idx));
                    const ForwardRecord rec2 = forward(student2, train.row(idx));

                    std::vector<ProbVector> negs2;
                    const Vec* b_weights2 = nullptr;
                    if (want_nicd) {
                        const RetrievalResult& result = ctx1.negatives->get(idx);
                        negs2 = gather_probs(ctx1.nicd_matrix, k, result.indices);
                        b_weights2 = &result.weights;
                    }
                    const TotalLossBreakdown br2 = total_loss(
                        y, rec2.logits, &rec1.logits,
                        want_picd ? &ctx1.aggregated[idx] : nullptr,
                        want_nicd ? &negs2 : nullptr, b_weights2, loss);

                    std::vector<ProbVector> negs1;
                    const Vec* b_weights1 = nullptr;
                    if (ctx2 && want_nicd) {
                        const RetrievalResult& result = ctx2->negatives->get(idx);
                        negs1 = gather_probs(ctx2->nicd_matrix, k, result.indices);
                        b_weights1 = &result.weights;
                    }
                    const TotalLossBreakdown br1 = total_loss(
                        y, rec1.logits, &rec2.logits,
                        ctx2 && want_picd ? &ctx2->aggregated[idx] : nullptr,
                        ctx2 && want_nicd ? &negs1 : nullptr, b_weights1, loss);

                    if (!std::isfinite(br1.total) || !std::isfinite(br2.total)) {
                        throw TrainAbort("non-finite loss at epoch " +
                                             std::to_string(epoch) + " sample " +
                                             std::to_string(idx),
                                         metrics1);
                    }
                    tally1.add(br1);
                    tally2.add(br2);
                    const Vec g1 = backward(student1, rec1, br1.logit_gradient);
                    const Vec g2 = backward(student2, rec2, br2.logit_gradient);
                    kernels::active().axpy(1.0, g1.data(), batch_grad1.data(),
                                           g1.size());
                    kernels::active().axpy(1.0, g2.data(), batch_grad2.data(),
                                           g2.size());
                }
                const double scale = 1.0 / double(end - begin);
                for (double& g : batch_grad1) g *= scale;
                for (double& g : batch_grad2) g *= scale;
                if (!all_finite(batch_grad1) || !all_finite(batch_grad2)) {
                    throw TrainAbort("non-finite gradient at epoch " +
                                         std::to_string(epoch),
                                     metrics1);
                }
                sgd_step(student1, batch_grad1, sgd, velocity1);
                sgd_step(student2, batch_grad2, sgd, velocity2);
            }

            EpochRecord rec;
            rec.epoch = epoch;
            rec.wall_ms = elapsed_ms(start);

            EpochRecord rec1 = rec;
            tally1.fill(rec1);
            rec1.train_acc = evaluate(student1, train);
            rec1.test_acc = evaluate(student1, test);
            rec1.bank_checksum = ctx2 ? ctx2->checksum : ctx1.checksum;
            metrics1.epochs.push_back(rec1);

            EpochRecord rec2 = rec;
            tally2.fill(rec2);
            rec2.train_acc = evaluate(student2, train);
            rec2.test_acc = evaluate(student2, test);
            rec2.bank_checksum = ctx1.checksum;
            metrics2.epochs.push_back(rec2);
        }
    } catch (const TrainAbort&) {
        throw;
    } catch (const NumericInstability& e) {
        throw TrainAbort(e.what(), metrics1);
    }
    metrics1.final_test_acc = metrics1.epochs.back().test_acc;
    metrics2.final_test_acc = metrics2.epochs.back().test_acc;
    return {std::move(student1), std::move(student2), std::move(metrics1),
            std::move(metrics2), bank_rebuilds};
}

TeacherFreeResult distill_teacher_free(const MlpArchitecture& arch,
                                       const LabeledDataset& train,
                                       const LabeledDataset& test,
                                       const TrainConfig& cfg) {
    cfg.validate();
    if (cfg.mode != TrainMode::teacher_free) {
        throw InvalidArgument("distill_teacher_free requires mode teacher_free");
    }

    TrainConfig stage1 = cfg;
    stage1.mode = TrainMode::ce_only;
    TrainResult baseline = train_teacher(arch, train, test, stage1);

    TrainConfig stage2 = cfg;
    stage2.mode = TrainMode::offline;
    TrainResult student = distill_offline(baseline.model, arch, train, test,
                                          stage2);
    return {std::move(baseline.model), std::move(student.model),
            std::move(baseline.metrics), std::move(student.metrics)};
}

} // namespace ickd
