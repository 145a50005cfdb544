#pragma once

#include "ickd/numerics.hpp"

#include <cstdint>
#include <vector>

namespace ickd {

struct LossConfig {
    double alpha = 0.5;
    double tau_kd = 4.0;
    double tau1 = 4.0;
    double tau_nicd = 1.0;
    double gamma_picd = 2.0;
    double gamma_nicd = 10.0;
    // Weighting ablations: off replaces the retrieval softmax weights with
    // uniform ones.
    bool use_a_weights = true;
    bool use_b_weights = true;
    // Multiply temperature-softened KL terms by tau^2 so their gradient
    // magnitude stays comparable across temperatures.
    bool scale_t_squared = true;

    void validate() const;
};

struct LossValue {
    double value = 0.0;
    Vec logit_gradient;
};

// (1-alpha) H(y, p) + alpha H(u, p) with u uniform. p is the student's
// softmax output; the gradient is with respect to the logits behind it.
LossValue lsr_loss(std::size_t y, const ProbVector& p, double alpha);

// (1-alpha) H(y, softmax(z_s)) + alpha KL(p_t(tau) || p_s(tau)), the soft
// term at temperature tau_kd (scaled by tau_kd^2 when configured).
LossValue kd_loss(std::size_t y, const Vec& student_logits,
                  const Vec& teacher_logits, const LossConfig& cfg);

// (1-alpha) q + alpha p_t, where q smooths the one-hot label with
// lsr_alpha. The target the KD objective effectively regresses onto.
ProbVector effective_target(std::size_t y, const ProbVector& teacher_prob,
                            double alpha, double lsr_alpha);

// KL(aggregated || softmax(z_s / tau1)), scaled by tau1^2 when configured.
LossValue picd_loss(const ProbVector& aggregated, const Vec& student_logits,
                    double tau1, bool scale_t_squared = true);

// 1 - cos(p_s, p_t) + sum_j b_j cos(p_s, neg_j). student_prob must be
// softmax(z_s / tau); the gradient is chained back to those logits.
LossValue nicd_loss(const ProbVector& student_prob,
                    const ProbVector& teacher_prob,
                    const std::vector<ProbVector>& negative_probs,
                    const Vec& b_weights, double tau = 1.0);

struct TotalLossBreakdown {
    double ce = 0.0;
    double kd = 0.0;
    double picd = 0.0;
    double nicd = 0.0;
    double total = 0.0;
    Vec logit_gradient;
};

// ce + kd + gamma_picd*picd + gamma_nicd*nicd. Null teacher_logits drops
// the kd term; a term with a null input or a zero gamma is skipped, not
// evaluated.
TotalLossBreakdown total_loss(std::size_t y, const Vec& student_logits,
                              const Vec* teacher_logits,
                              const ProbVector* aggregated,
                              const std::vector<ProbVector>* negative_probs,
                              const Vec* b_weights, const LossConfig& cfg);

// Evaluation counts for the two in-context terms, for checking that
// disabled paths are never entered.
struct LossCounters {
    std::uint64_t picd_evaluations = 0;
    std::uint64_t nicd_evaluations = 0;
};

LossCounters loss_counters();
void reset_loss_counters();

} // namespace ickd
