#include "ickd/numerics.hpp"

#include "ickd/error.hpp"
#include "ickd/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ickd {

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x))
            return false;
    return true;
}

ProbVector::ProbVector(Vec values) : values_(std::move(values)) {
    if (values_.size() < 2)
        throw InvalidArgument("probability vector needs at least 2 classes, got " +
                              std::to_string(values_.size()));
    for (std::size_t i = 0; i < values_.size(); ++i) {
        const double v = values_[i];
        if (!std::isfinite(v))
            throw NumericInstability("probability entry " + std::to_string(i) +
                                     " is not finite");
        if (v < -1e-9 || v > 1.0 + 1e-9)
            throw InvalidArgument("probability entry " + std::to_string(i) +
                                  " out of [0,1]: " + std::to_string(v));
    }
    const double total = kernels::active().sum(values_.data(), values_.size());
    if (std::abs(total - 1.0) > 1e-9)
        throw InvalidArgument("probabilities sum to " + std::to_string(total) +
                              ", expected 1");
}

ProbVector ProbVector::uniform(std::size_t k) {
    if (k < 2)
        throw InvalidArgument("uniform distribution needs k >= 2");
    return ProbVector(Vec(k, 1.0 / static_cast<double>(k)));
}

ProbVector ProbVector::one_hot(std::size_t k, std::size_t hot) {
    if (k < 2)
        throw InvalidArgument("one-hot distribution needs k >= 2");
    if (hot >= k)
        throw InvalidArgument("one-hot index " + std::to_string(hot) +
                              " out of range for k=" + std::to_string(k));
    Vec v(k, 0.0);
    v[hot] = 1.0;
    return ProbVector(std::move(v));
}

ProbVector softmax_with_temperature(std::span<const double> logits, double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw InvalidArgument("softmax temperature must be positive and finite");
    if (!all_finite(logits))
        throw NumericInstability("softmax input contains NaN/Inf");
    if (logits.size() < 2)
        throw InvalidArgument("softmax needs at least 2 logits");

    const auto& ops = kernels::active();
    const double m = ops.max(logits.data(), logits.size());
    Vec e(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i)
        e[i] = std::exp((logits[i] - m) / tau);
    const double z = ops.sum(e.data(), e.size());
    for (double& v : e)
        v /= z;
    return ProbVector(std::move(e));
}

double cross_entropy(const ProbVector& target, const ProbVector& pred) {
    if (target.size() != pred.size())
        throw InvalidArgument("cross_entropy length mismatch: " +
                              std::to_string(target.size()) + " vs " +
                              std::to_string(pred.size()));
    double acc = 0.0;
    for (std::size_t k = 0; k < target.size(); ++k)
        acc -= target[k] * std::log(std::max(pred[k], kLogClamp));
    return acc;
}

double kl_divergence(const ProbVector& target, const ProbVector& pred) {
    return cross_entropy(target, pred) - cross_entropy(target, target);
}

double cosine_similarity(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size())
        throw InvalidArgument("cosine_similarity length mismatch: " +
                              std::to_string(u.size()) + " vs " +
                              std::to_string(v.size()));
    const auto& ops = kernels::active();
    const double nu = std::sqrt(ops.dot(u.data(), u.data(), u.size()));
    const double nv = std::sqrt(ops.dot(v.data(), v.data(), v.size()));
    if (nu < kNormFloor || nv < kNormFloor)
        throw DegenerateVector("cosine_similarity: vector norm below " +
                               std::to_string(kNormFloor));
    const double c = ops.dot(u.data(), v.data(), u.size()) / (nu * nv);
    return std::clamp(c, -1.0, 1.0);
}

GradCheckReport grad_check(const ScalarFn& loss, const GradFn& analytic_grad,
                           const Vec& params, double epsilon) {
    if (!(epsilon > 0.0))
        throw InvalidArgument("grad_check epsilon must be positive");
    const Vec ga = analytic_grad(params);
    if (ga.size() != params.size())
        throw InvalidArgument("analytic gradient length mismatch");

    GradCheckReport report;
    Vec probe = params;
    for (std::size_t i = 0; i < params.size(); ++i) {
        probe[i] = params[i] + epsilon;
        const double up = loss(probe);
        probe[i] = params[i] - epsilon;
        const double down = loss(probe);
        probe[i] = params[i];
        if (!std::isfinite(up) || !std::isfinite(down))
            throw NumericInstability("grad_check: non-finite loss while probing parameter " +
                                     std::to_string(i));
        const double gn = (up - down) / (2.0 * epsilon);
        const double rel =
            std::abs(ga[i] - gn) / std::max({1.0, std::abs(ga[i]), std::abs(gn)});
        if (rel >= report.max_relative_error) {
            report.max_relative_error = rel;
            report.worst_parameter_index = i;
            report.analytic = ga[i];
            report.numeric = gn;
        }
    }
    return report;
}

} // namespace ickd
