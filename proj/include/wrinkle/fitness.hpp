#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "json.hpp"
#include "wrinkle/error.hpp"

namespace wrinkle {

/// Class probabilities returned by an oracle.
struct ProbVector {
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }

  /// Index of the largest probability; ties go to the lowest index.
  std::size_t argmax() const {
    if (values.empty()) throw InvariantError("argmax of empty probability vector");
    return static_cast<std::size_t>(
        std::max_element(values.begin(), values.end()) - values.begin());
  }

  /// Non-negative, at most 1, finite, summing to 1 within 1e-6.
  bool is_valid() const noexcept {
    if (values.size() < 2) return false;
    double sum = 0.0;
    for (double p : values) {
      if (!std::isfinite(p) || p < 0.0 || p > 1.0) return false;
      sum += p;
    }
    return std::abs(sum - 1.0) <= 1e-6;
  }

  bool operator==(const ProbVector&) const = default;
};

struct FitnessConfig {
  double alpha2 = 0.3;
  double eta = 0.5;
  double eps_adv = 1e-8;

  void validate() const {
    if (!(alpha2 >= 0.0 && alpha2 <= 1.0))
      throw UsageError("fitness: alpha2 must lie in [0, 1]");
    if (!(eta >= 0.0 && eta <= 1.0))
      throw UsageError("fitness: eta must lie in [0, 1]");
    if (!(eps_adv > 0.0 && eps_adv < 1.0))
      throw UsageError("fitness: eps_adv must lie in (0, 1)");
  }
  bool operator==(const FitnessConfig&) const = default;
};

namespace detail {
inline void check_label(const ProbVector& probs, std::size_t label) {
  if (label >= probs.size())
    throw UsageError("label index " + std::to_string(label) +
                     " out of range for " + std::to_string(probs.size()) +
                     " classes");
}
}  // namespace detail

/// True iff the predicted class differs from `label`.
inline bool success_indicator(const ProbVector& probs, std::size_t label) {
  detail::check_label(probs, label);
  return probs.argmax() != label;
}

/// -log(p_y + eps_adv).
inline double adversarial_score(const ProbVector& probs, std::size_t label,
                                const FitnessConfig& cfg) {
  detail::check_label(probs, label);
  return -std::log(probs.values[label] + cfg.eps_adv);
}

/// Maps the score onto [0, 1] by dividing by its attainable maximum,
/// -log(eps_adv), and clamping.
inline double normalize_adv(double s_adv, const FitnessConfig& cfg) {
  const double s_max = -std::log(cfg.eps_adv);
  return std::clamp(s_adv / s_max, 0.0, 1.0);
}

/// Failures score (1 - alpha2) * s_ladv + alpha2 * s_perc in [0, 1];
/// successes score 1 + eta * s_perc >= 1.
inline double hierarchical_fitness(double s_ladv, double s_perc, bool success,
                                   const FitnessConfig& cfg) {
  if (!(s_ladv >= 0.0 && s_ladv <= 1.0) || !(s_perc >= 0.0 && s_perc <= 1.0))
    throw InvariantError("hierarchical_fitness: inputs must lie in [0, 1]");
  if (success) return 1.0 + cfg.eta * s_perc;
  return (1.0 - cfg.alpha2) * s_ladv + cfg.alpha2 * s_perc;
}

inline void to_json(nlohmann::json& j, const FitnessConfig& c) {
  j = nlohmann::json{{"alpha2", c.alpha2}, {"eta", c.eta}, {"eps_adv", c.eps_adv}};
}
inline void from_json(const nlohmann::json& j, FitnessConfig& c) {
  const FitnessConfig d;
  c.alpha2 = j.value("alpha2", d.alpha2);
  c.eta = j.value("eta", d.eta);
  c.eps_adv = j.value("eps_adv", d.eps_adv);
}

}  // namespace wrinkle
