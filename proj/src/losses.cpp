#include "ickd/losses.hpp"

#include "ickd/error.hpp"
#include "ickd/kernels.hpp"

#include <atomic>
#include <cmath>

namespace ickd {

namespace {

std::atomic<std::uint64_t> g_picd_evaluations{0};
std::atomic<std::uint64_t> g_nicd_evaluations{0};

// d cos(p, t) / d p, holding t fixed.
Vec cosine_gradient(const Vec& p, const Vec& t) {
    const auto& ops = kernels::active();
    const double p_norm = std::sqrt(ops.dot(p.data(), p.data(), p.size()));
    const double t_norm = std::sqrt(ops.dot(t.data(), t.data(), t.size()));
    const double cos = cosine_similarity(p, t);
    Vec grad(p.size());
    for (std::size_t k = 0; k < p.size(); ++k) {
        grad[k] = t[k] / (p_norm * t_norm) - cos * p[k] / (p_norm * p_norm);
    }
    return grad;
}

// Pull d loss / d prob back through prob = softmax(z / tau).
Vec softmax_chain(const Vec& prob, const Vec& prob_gradient, double tau) {
    const auto& ops = kernels::active();
    const double mean = ops.dot(prob_gradient.data(), prob.data(), prob.size());
    Vec grad(prob.size());
    for (std::size_t k = 0; k < prob.size(); ++k) {
        grad[k] = prob[k] * (prob_gradient[k] - mean) / tau;
    }
    return grad;
}

} // namespace

void LossConfig::validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw InvalidArgument("loss alpha must lie in [0, 1]");
    }
    if (!(tau_kd > 0.0) || !(tau1 > 0.0) || !(tau_nicd > 0.0)) {
        throw InvalidArgument("loss temperatures must be positive");
    }
    if (!(gamma_picd >= 0.0) || !(gamma_nicd >= 0.0)) {
        throw InvalidArgument("loss gammas must be nonnegative");
    }
}

LossValue lsr_loss(std::size_t y, const ProbVector& p, double alpha) {
    const std::size_t k = p.size();
    if (y >= k) throw InvalidArgument("label out of range");
    if (!(alpha >= 0.0 && alpha <= 1.0)) {
        throw InvalidArgument("lsr alpha must lie in [0, 1]");
    }

    const ProbVector y_hot = ProbVector::one_hot(k, y);
    const ProbVector u = ProbVector::uniform(k);
    LossValue out;
    out.value = (1.0 - alpha) * cross_entropy(y_hot, p) +
                alpha * cross_entropy(u, p);
    out.logit_gradient.resize(k);
    for (std::size_t m = 0; m < k; ++m) {
        const double target = (1.0 - alpha) * y_hot[m] + alpha * u[m];
        out.logit_gradient[m] = p[m] - target;
    }
    return out;
}

LossValue kd_loss(std::size_t y, const Vec& student_logits,
                  const Vec& teacher_logits, const LossConfig& cfg) {
    cfg.validate();
    if (student_logits.size() != teacher_logits.size()) {
        throw InvalidArgument("student and teacher logit lengths differ");
    }
    const std::size_t k = student_logits.size();
    if (y >= k) throw InvalidArgument("label out of range");

    const ProbVector student_plain = softmax_with_temperature(student_logits, 1.0);
    const ProbVector student_soft =
        softmax_with_temperature(student_logits, cfg.tau_kd);
    const ProbVector teacher_soft =
        softmax_with_temperature(teacher_logits, cfg.tau_kd);

    const double hard = cross_entropy(ProbVector::one_hot(k, y), student_plain);
    const double soft = kl_divergence(teacher_soft, student_soft);
    const double scale = cfg.scale_t_squared ? cfg.tau_kd * cfg.tau_kd : 1.0;

    LossValue out;
    out.value = (1.0 - cfg.alpha) * hard + cfg.alpha * scale * soft;
    out.logit_gradient.resize(k);
    for (std::size_t m = 0; m < k; ++m) {
        const double hard_grad = student_plain[m] - (m == y ? 1.0 : 0.0);
        const double soft_grad =
            (student_soft[m] - teacher_soft[m]) / cfg.tau_kd;
        out.logit_gradient[m] =
            (1.0 - cfg.alpha) * hard_grad + cfg.alpha * scale * soft_grad;
    }
    return out;
}

ProbVector effective_target(std::size_t y, const ProbVector& teacher_prob,
                            double alpha, double lsr_alpha) {
    const std::size_t k = teacher_prob.size();
    if (y >= k) throw InvalidArgument("label out of range");
    if (!(alpha >= 0.0 && alpha <= 1.0) || !(lsr_alpha >= 0.0 && lsr_alpha <= 1.0)) {
        throw InvalidArgument("target alphas must lie in [0, 1]");
    }

    Vec mixed(k);
    for (std::size_t m = 0; m < k; ++m) {
        const double smoothed =
            (1.0 - lsr_alpha) * (m == y ? 1.0 : 0.0) + lsr_alpha / double(k);
        mixed[m] = (1.0 - alpha) * smoothed + alpha * teacher_prob[m];
    }
    return ProbVector(std::move(mixed));
}

LossValue picd_loss(const ProbVector& aggregated, const Vec& student_logits,
                    double tau1, bool scale_t_squared) {
    if (!(tau1 > 0.0)) throw InvalidArgument("tau1 must be positive");
    if (aggregated.size() != student_logits.size()) {
        throw InvalidArgument("aggregated target and logit lengths differ");
    }
    g_picd_evaluations.fetch_add(1, std::memory_order_relaxed);

    const ProbVector student_soft = softmax_with_temperature(student_logits, tau1);
    const double scale = scale_t_squared ? tau1 * tau1 : 1.0;

    LossValue out;
    out.value = scale * kl_divergence(aggregated, student_soft);
    out.logit_gradient.resize(student_logits.size());
    for (std::size_t m = 0; m < student_logits.size(); ++m) {
        out.logit_gradient[m] = scale * (student_soft[m] - aggregated[m]) / tau1;
    }
    return out;
}

LossValue nicd_loss(const ProbVector& student_prob,
                    const ProbVector& teacher_prob,
                    const std::vector<ProbVector>& negative_probs,
                    const Vec& b_weights, double tau) {
    if (!(tau > 0.0)) throw InvalidArgument("nicd tau must be positive");
    if (student_prob.size() != teacher_prob.size()) {
        throw InvalidArgument("student and teacher prediction lengths differ");
    }
    if (negative_probs.empty()) {
        throw InvalidArgument("nicd needs at least one negative prediction");
    }
    if (negative_probs.size() != b_weights.size()) {
        throw InvalidArgument("negative predictions and b weights differ in count");
    }
    double weight_sum = 0.0;
    for (double w : b_weights) {
        if (!(w >= 0.0)) throw InvalidArgument("b weights must be nonnegative");
        weight_sum += w;
    }
    if (std::abs(weight_sum - 1.0) > 1e-9) {
        throw InvalidArgument("b weights must sum to 1");
    }
    g_nicd_evaluations.fetch_add(1, std::memory_order_relaxed);

    const Vec& p = student_prob.values();
    const Vec& t = teacher_prob.values();

    double value = 1.0 - cosine_similarity(p, t);
    Vec prob_gradient = cosine_gradient(p, t);
    for (double& g : prob_gradient) g = -g;

    for (std::size_t j = 0; j < negative_probs.size(); ++j) {
        const Vec& neg = negative_probs[j].values();
        if (neg.size() != p.size()) {
            throw InvalidArgument("negative prediction length differs");
        }
        value += b_weights[j] * cosine_similarity(p, neg);
        const Vec g = cosine_gradient(p, neg);
        kernels::active().axpy(b_weights[j], g.data(), prob_gradient.data(),
                               p.size());
    }

    LossValue out;
    out.value = value;
    out.logit_gradient = softmax_chain(p, prob_gradient, tau);
    return out;
}

TotalLossBreakdown total_loss(std::size_t y, const Vec& student_logits,
                              const Vec* teacher_logits,
                              const ProbVector* aggregated,
                              const std::vector<ProbVector>* negative_probs,
                              const Vec* b_weights, const LossConfig& cfg) {
    cfg.validate();
    const std::size_t k = student_logits.size();
    if (y >= k) throw InvalidArgument("label out of range");

    TotalLossBreakdown out;
    out.logit_gradient.assign(k, 0.0);
    const auto& ops = kernels::active();

    const ProbVector student_plain = softmax_with_temperature(student_logits, 1.0);
    out.ce = cross_entropy(ProbVector::one_hot(k, y), student_plain);
    for (std::size_t m = 0; m < k; ++m) {
        out.logit_gradient[m] = student_plain[m] - (m == y ? 1.0 : 0.0);
    }

    if (teacher_logits != nullptr) {
        const LossValue kd = kd_loss(y, student_logits, *teacher_logits, cfg);
        out.kd = kd.value;
        ops.axpy(1.0, kd.logit_gradient.data(), out.logit_gradient.data(), k);
    }

    if (aggregated != nullptr && cfg.gamma_picd > 0.0) {
        const LossValue picd =
            picd_loss(*aggregated, student_logits, cfg.tau1, cfg.scale_t_squared);
        out.picd = picd.value;
        ops.axpy(cfg.gamma_picd, picd.logit_gradient.data(),
                 out.logit_gradient.data(), k);
    }

    if (teacher_logits != nullptr && negative_probs != nullptr &&
        b_weights != nullptr && cfg.gamma_nicd > 0.0) {
        const ProbVector student_prob =
            softmax_with_temperature(student_logits, cfg.tau_nicd);
        const ProbVector teacher_prob =
            softmax_with_temperature(*teacher_logits, cfg.tau_nicd);
        Vec weights = *b_weights;
        if (!cfg.use_b_weights) {
            weights.assign(weights.size(), 1.0 / double(weights.size()));
        }
        const LossValue nicd = nicd_loss(student_prob, teacher_prob,
                                         *negative_probs, weights, cfg.tau_nicd);
        out.nicd = nicd.value;
        ops.axpy(cfg.gamma_nicd, nicd.logit_gradient.data(),
                 out.logit_gradient.data(), k);
    }

    out.total = out.ce + out.kd + cfg.gamma_picd * out.picd +
                cfg.gamma_nicd * out.nicd;
    return out;
}

LossCounters loss_counters() {
    return {g_picd_evaluations.load(std::memory_order_relaxed),
            g_nicd_evaluations.load(std::memory_order_relaxed)};
}

void reset_loss_counters() {
    g_picd_evaluations.store(0, std::memory_order_relaxed);
    g_nicd_evaluations.store(0, std::memory_order_relaxed);
}

} // namespace ickd
