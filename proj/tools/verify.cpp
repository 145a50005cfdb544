#include "verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <span>
#include <numeric>
#include <sstream>
#include <vector>

#include "ickd/bank.hpp"
#include "ickd/losses.hpp"
#include "ickd/numerics.hpp"
#include "ickd/rng.hpp"

namespace ickd::tools {
namespace {

using ickd::Vec;

Vec random_logits(SplitMix64& rng, std::size_t n) {
  Vec z(n);
  for (double& v : z) v = 8.0 * rng.next_double() - 4.0;
  return z;
}

ProbVector random_prob(SplitMix64& rng, std::size_t n) {
  return softmax_with_temperature(random_logits(rng, n), 1.0);
}

struct CheckResult {
  bool pass = false;
  std::string detail;
};

void report(std::ostream& out, const std::string& name, const CheckResult& r,
            bool& all_pass) {
  out << (r.pass ? "PASS " : "FAIL ") << name;
  if (!r.detail.empty()) out << " (" << r.detail << ")";
  out << "\n";
  if (!r.pass) all_pass = false;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(3) << std::scientific << v;
  return os.str();
}

// Runs grad_check over `cases` random logit vectors for one loss family.
// `eval` returns the LossValue at the given logits; configuration state is
// captured in the closure and redrawn per case via the rng.
CheckResult run_gradient_check(
    int cases,
    std::uint64_t seed,
    const std::function<std::function<LossValue(const Vec&)>(
        SplitMix64&, std::size_t)>& make_eval) {
  SplitMix64 rng(seed);
  double worst = 0.0;
  for (int c = 0; c < cases; ++c) {
    const std::size_t n = 3 + rng.next_below(8);
    auto eval = make_eval(rng, n);
    Vec z = random_logits(rng, n);
    auto loss = [&](std::span<const double> p) {
      return eval(Vec(p.begin(), p.end())).value;
    };
    auto grad = [&](std::span<const double> p) {
      return eval(Vec(p.begin(), p.end())).logit_gradient;
    };
    const GradCheckReport rep = grad_check(loss, grad, z);
    worst = std::max(worst, rep.max_relative_error);
  }
  CheckResult r;
  r.pass = worst < 1e-5;
  r.detail = "max rel err " + fmt(worst) + " over " + std::to_string(cases) +
             " cases";
  return r;
}

// With a fixed teacher, label, and alpha, CE against the blended effective
// target and the KD loss at tau = 1 differ by the constant alpha * H(teacher)
// no matter what the student emits.
CheckResult check_lsr_kd_equivalence(const std::string& inject_fault) {
  SplitMix64 rng(0x4C53524Bu);
  const double kl_sign = inject_fault == "kl_sign" ? -1.0 : 1.0;
  double worst_gap = 0.0;
  double worst_spread = 0.0;
  double last_const = 0.0;
  for (int c = 0; c < 10; ++c) {
    const std::size_t n = 3 + rng.next_below(8);
    const std::size_t y = rng.next_below(n);
    const ProbVector teacher = random_prob(rng, n);
    const double alpha = 0.1 + 0.8 * rng.next_double();

    LossConfig cfg;
    cfg.alpha = alpha;
    cfg.tau_kd = 1.0;
    Vec zt(n);
    // kd_loss consumes teacher logits; log(p) reproduces the distribution.
    for (std::size_t k = 0; k < n; ++k) zt[k] = std::log(teacher[k]);

    const ProbVector target = effective_target(y, teacher, alpha, 0.0);
    const ProbVector y_hot = ProbVector::one_hot(n, y);
    const double entropy = cross_entropy(teacher, teacher);

    double min_const = 1e300;
    double max_const = -1e300;
    for (int s = 0; s < 20; ++s) {
      const Vec zs = random_logits(rng, n);
      const ProbVector ps = softmax_with_temperature(zs, 1.0);

      const double kd_library = kd_loss(y, zs, zt, cfg).value;
      const double kd_composed = (1.0 - alpha) * cross_entropy(y_hot, ps) +
                                 alpha * kl_sign * kl_divergence(teacher, ps);
      worst_gap = std::max(worst_gap, std::abs(kd_library - kd_composed));

      const double constant = cross_entropy(target, ps) - kd_composed;
      min_const = std::min(min_const, constant);
      max_const = std::max(max_const, constant);
      worst_gap = std::max(worst_gap, std::abs(constant - alpha * entropy));
      last_const = constant;
    }
    worst_spread = std::max(worst_spread, max_const - min_const);
  }
  CheckResult r;
  r.pass = worst_gap < 1e-9 && worst_spread < 1e-9;
  r.detail = "constant " + fmt(last_const) + ", spread " + fmt(worst_spread) +
             ", worst gap " + fmt(worst_gap);
  return r;
}

struct OracleSelection {
  std::vector<std::size_t> indices;
  Vec weights;
};

// Independent full-sort reference for retrieve(): rank every unmasked
// candidate, take the prefix, softmax the selected scaled similarities.
OracleSelection oracle_retrieve(const FeatureBank& bank, std::size_t qi,
                                bool positives, double beta,
                                std::size_t want) {
  const std::uint16_t label = bank.labels[qi];
  std::vector<std::pair<double, std::size_t>> ranked;
  for (std::size_t i = 0; i < bank.size(); ++i) {
    const bool same = bank.labels[i] == label;
    if (positives ? (!same || i == qi) : same) continue;
    double dot = 0.0;
    for (std::size_t d = 0; d < bank.dim; ++d)
      dot += bank.features[qi * bank.dim + d] * bank.features[i * bank.dim + d];
    double cosv = dot / (bank.row_norms[qi] * bank.row_norms[i]);
    cosv = std::clamp(cosv, -1.0, 1.0);
    ranked.emplace_back(cosv / beta, i);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  const std::size_t take = std::min(want, ranked.size());
  OracleSelection out;
  out.indices.resize(take);
  out.weights.resize(take);
  if (take == 1) {
    out.indices[0] = ranked[0].second;
    out.weights[0] = 1.0;
    return out;
  }
  double denom = 0.0;
  Vec e(take);
  for (std::size_t j = 0; j < take; ++j) {
    out.indices[j] = ranked[j].second;
    e[j] = std::exp(ranked[j].first);
    denom += e[j];
  }
  for (std::size_t j = 0; j < take; ++j) out.weights[j] = e[j] / denom;
  return out;
}

FeatureBank random_bank(SplitMix64& rng, std::size_t n, std::size_t dim,
                        std::uint16_t classes) {
  Vec features(n * dim);
  for (double& v : features) v = rng.next_gaussian();
  std::vector<std::uint16_t> labels(n);
  // Round-robin guarantees every class is populated at least twice.
  for (std::size_t i = 0; i < n; ++i)
    labels[i] = static_cast<std::uint16_t>(i % classes);
  shuffle(labels, rng);
  return make_bank(features, labels, dim, 0);
}

CheckResult check_retrieval_oracle() {
  SplitMix64 rng(0x52455452u);
  double worst = 0.0;
  std::size_t mask_violations = 0;
  std::size_t mismatches = 0;
  const int banks = 30;
  for (int b = 0; b < banks; ++b) {
    const std::size_t n = 16 + rng.next_below(240);
    const std::size_t dim = 2 + rng.next_below(31);
    const auto classes = static_cast<std::uint16_t>(2 + rng.next_below(7));
    FeatureBank bank = random_bank(rng, n, dim, classes);

    RetrievalConfig cfg;
    cfg.beta1 = 0.5 + 3.5 * rng.next_double();
    cfg.beta2 = 0.5 + 7.5 * rng.next_double();
    cfg.k_positive = 1 + rng.next_below(16);
    cfg.n_negative = 1 + rng.next_below(16);

    for (int q = 0; q < 8; ++q) {
      const std::size_t qi = rng.next_below(n);
      const std::uint16_t label = bank.labels[qi];
      for (const bool positive : {true, false}) {
        const RetrievalResult got = positive
                                        ? retrieve_positive(bank, qi, cfg)
                                        : retrieve_negative(bank, qi, cfg, 0);
        const std::size_t want = positive ? cfg.k_positive : cfg.n_negative;
        const OracleSelection want_sel = oracle_retrieve(
            bank, qi, positive, positive ? cfg.beta1 : cfg.beta2, want);
        if (got.indices != want_sel.indices) {
          ++mismatches;
          continue;
        }
        for (std::size_t j = 0; j < got.indices.size(); ++j) {
          worst = std::max(worst,
                           std::abs(got.weights[j] - want_sel.weights[j]));
          const bool same = bank.labels[got.indices[j]] == label;
          if (positive && (!same || got.indices[j] == qi)) ++mask_violations;
          if (!positive && same) ++mask_violations;
        }
      }
    }
  }
  CheckResult r;
  r.pass = mismatches == 0 && mask_violations == 0 && worst < 1e-9;
  r.detail = std::to_string(banks) + " banks, " +
             std::to_string(mismatches) + " index mismatches, " +
             std::to_string(mask_violations) + " mask violations, worst weight gap " +
             fmt(worst);
  return r;
}

CheckResult check_aggregation_convexity() {
  SplitMix64 rng(0x41474752u);
  double worst_sum = 0.0;
  double worst_range = 0.0;
  for (int c = 0; c < 200; ++c) {
    const std::size_t n = 2 + rng.next_below(15);
    const std::size_t k = 2 + rng.next_below(10);
    std::vector<Vec> rows;
    RetrievalResult sel;
    sel.polarity = Polarity::positive;
    Vec raw(k);
    for (double& v : raw) v = rng.next_double() + 1e-3;
    const double total = std::accumulate(raw.begin(), raw.end(), 0.0);
    Vec softened;
    softened.reserve(k * n);
    Vec lo(n, 1e300), hi(n, -1e300);
    for (std::size_t j = 0; j < k; ++j) {
      sel.indices.push_back(j);
      sel.weights.push_back(raw[j] / total);
      const ProbVector p = random_prob(rng, n);
      for (std::size_t d = 0; d < n; ++d) {
        softened.push_back(p[d]);
        lo[d] = std::min(lo[d], p[d]);
        hi[d] = std::max(hi[d], p[d]);
      }
    }
    const ProbVector agg = aggregate_predictions(softened, n, sel);
    double sum = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
      sum += agg[d];
      const double below = lo[d] - agg[d];
      const double above = agg[d] - hi[d];
      worst_range = std::max({worst_range, below, above});
    }
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
  }
  CheckResult r;
  r.pass = worst_sum < 1e-9 && worst_range < 1e-9;
  r.detail = "worst sum gap " + fmt(worst_sum) + ", worst range escape " +
             fmt(worst_range);
  return r;
}

CheckResult check_loss_bounds() {
  SplitMix64 rng(0x424E4453u);
  double min_picd = 1e300;
  double min_nicd = 1e300;
  double max_nicd = -1e300;
  for (int c = 0; c < 300; ++c) {
    const std::size_t n = 2 + rng.next_below(15);
    const double tau = 1.0 + 3.0 * rng.next_double();
    const ProbVector agg = random_prob(rng, n);
    const Vec zs = random_logits(rng, n);
    min_picd = std::min(min_picd, picd_loss(agg, zs, tau).value);

    const ProbVector ps = random_prob(rng, n);
    const ProbVector pt = random_prob(rng, n);
    const std::size_t negs = 1 + rng.next_below(6);
    std::vector<ProbVector> neg_probs;
    Vec b(negs, 1.0 / static_cast<double>(negs));
    for (std::size_t j = 0; j < negs; ++j)
      neg_probs.push_back(random_prob(rng, n));
    const double v = nicd_loss(ps, pt, neg_probs, b).value;
    min_nicd = std::min(min_nicd, v);
    max_nicd = std::max(max_nicd, v);
  }
  CheckResult r;
  r.pass = min_picd > -1e-10 && min_nicd > -1e-12 && max_nicd < 2.0 + 1e-12;
  r.detail = "picd min " + fmt(min_picd) + ", nicd range [" + fmt(min_nicd) +
             ", " + fmt(max_nicd) + "]";
  return r;
}

} // namespace

bool run_verify(std::ostream& out, const std::string& inject_fault) {
  bool all_pass = true;

  report(out, "gradient_lsr",
         run_gradient_check(10, 0x474C5352u,
                            [](SplitMix64& rng, std::size_t n) {
                              const std::size_t y = rng.next_below(n);
                              const double alpha = rng.next_double();
                              return std::function<LossValue(const Vec&)>(
                                  [y, alpha](const Vec& z) {
                                    return lsr_loss(
                                        y, softmax_with_temperature(z, 1.0),
                                        alpha);
                                  });
                            }),
         all_pass);

  report(out, "gradient_kd",
         run_gradient_check(10, 0x474B444Cu,
                            [](SplitMix64& rng, std::size_t n) {
                              LossConfig cfg;
                              cfg.alpha = rng.next_double();
                              cfg.tau_kd = 1.0 + 4.0 * rng.next_double();
                              const std::size_t y = rng.next_below(n);
                              const Vec zt = random_logits(rng, n);
                              return std::function<LossValue(const Vec&)>(
                                  [y, zt, cfg](const Vec& z) {
                                    return kd_loss(y, z, zt, cfg);
                                  });
                            }),
         all_pass);

  report(out, "gradient_picd",
         run_gradient_check(10, 0x47504943u,
                            [](SplitMix64& rng, std::size_t n) {
                              const ProbVector agg = random_prob(rng, n);
                              const double tau = 1.0 + 4.0 * rng.next_double();
                              return std::function<LossValue(const Vec&)>(
                                  [agg, tau](const Vec& z) {
                                    return picd_loss(agg, z, tau);
                                  });
                            }),
         all_pass);

  report(out, "gradient_nicd",
         run_gradient_check(10, 0x474E4943u,
                            [](SplitMix64& rng, std::size_t n) {
                              const ProbVector pt = random_prob(rng, n);
                              const std::size_t negs = 1 + rng.next_below(5);
                              std::vector<ProbVector> neg_probs;
                              for (std::size_t j = 0; j < negs; ++j)
                                neg_probs.push_back(random_prob(rng, n));
                              Vec b = random_logits(rng, negs);
                              double mx = *std::max_element(b.begin(), b.end());
                              double denom = 0.0;
                              for (double& v : b) {
                                v = std::exp(v - mx);
                                denom += v;
                              }
                              for (double& v : b) v /= denom;
                              const double tau = 1.0 + rng.next_double();
                              return std::function<LossValue(const Vec&)>(
                                  [pt, neg_probs, b, tau](const Vec& z) {
                                    const ProbVector ps =
                                        softmax_with_temperature(z, tau);
                                    LossValue lv =
                                        nicd_loss(ps, pt, neg_probs, b, tau);
                                    return lv;
                                  });
                            }),
         all_pass);

  report(out, "gradient_total",
         run_gradient_check(10, 0x47544F54u,
                            [](SplitMix64& rng, std::size_t n) {
                              LossConfig cfg;
                              cfg.alpha = rng.next_double();
                              cfg.tau_kd = 1.0 + 3.0 * rng.next_double();
                              cfg.tau1 = 1.0 + 3.0 * rng.next_double();
                              cfg.gamma_picd = 4.0 * rng.next_double();
                              cfg.gamma_nicd = 4.0 * rng.next_double();
                              const std::size_t y = rng.next_below(n);
                              const Vec zt = random_logits(rng, n);
                              const ProbVector agg = random_prob(rng, n);
                              const std::size_t negs = 1 + rng.next_below(4);
                              std::vector<ProbVector> neg_probs;
                              for (std::size_t j = 0; j < negs; ++j)
                                neg_probs.push_back(random_prob(rng, n));
                              const Vec b(negs,
                                          1.0 / static_cast<double>(negs));
                              return std::function<LossValue(const Vec&)>(
                                  [y, zt, agg, neg_probs, b, cfg](const Vec& z) {
                                    const TotalLossBreakdown br = total_loss(
                                        y, z, &zt, &agg, &neg_probs, &b, cfg);
                                    return LossValue{br.total,
                                                     br.logit_gradient};
                                  });
                            }),
         all_pass);

  report(out, "lsr_kd_equivalence", check_lsr_kd_equivalence(inject_fault),
         all_pass);
  report(out, "retrieval_oracle", check_retrieval_oracle(), all_pass);
  report(out, "aggregation_convexity", check_aggregation_convexity(),
         all_pass);
  report(out, "loss_bounds", check_loss_bounds(), all_pass);

  out << (all_pass ? "verify: all checks passed"
                   : "verify: at least one check failed")
      << "\n";
  return all_pass;
}

} // namespace ickd::tools
