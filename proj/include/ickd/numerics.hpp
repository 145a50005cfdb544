#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace ickd {

using Vec = std::vector<double>;

// Floor applied under every logarithm so one-hot targets stay finite.
inline constexpr double kLogClamp = 1e-12;

// Below this L2 norm a vector has no usable direction.
inline constexpr double kNormFloor = 1e-12;

// A distribution over at least two classes: entries in [0, 1] and summing
// to 1, both within 1e-9. Construction validates; the payload is immutable.
class ProbVector {
public:
    explicit ProbVector(Vec values);

    static ProbVector uniform(std::size_t k);
    static ProbVector one_hot(std::size_t k, std::size_t hot);

    const Vec& values() const noexcept { return values_; }
    double operator[](std::size_t i) const noexcept { return values_[i]; }
    std::size_t size() const noexcept { return values_.size(); }

private:
    Vec values_;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    std::size_t worst_parameter_index = 0;
    double analytic = 0.0; // gradient entry at the worst index
    double numeric = 0.0;  // central difference at the worst index
};

// softmax(z / tau) with max subtraction. tau must be positive and z finite.
ProbVector softmax_with_temperature(std::span<const double> logits, double tau);

// -sum_k target[k] * log(max(pred[k], kLogClamp))
double cross_entropy(const ProbVector& target, const ProbVector& pred);

// H(target, pred) - H(target, target); nonnegative up to rounding.
double kl_divergence(const ProbVector& target, const ProbVector& pred);

// <u, v> / (|u| |v|), clamped into [-1, 1]. Throws DegenerateVector when
// either norm is below kNormFloor.
double cosine_similarity(std::span<const double> u, std::span<const double> v);

using ScalarFn = std::function<double(const Vec&)>;
using GradFn = std::function<Vec(const Vec&)>;

// Central differences per coordinate against the supplied analytic
// gradient. Relative error is |ga - gn| / max(1, |ga|, |gn|).
GradCheckReport grad_check(const ScalarFn& loss, const GradFn& analytic_grad,
                           const Vec& params, double epsilon = 1e-4);

// True when every entry is finite.
bool all_finite(std::span<const double> v);

} // namespace ickd
