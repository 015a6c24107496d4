#pragma once

// Shared helpers for the unit and acceptance suites: random inputs,
// implementation-independent oracles, and scripted classifiers.

#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "wrinkle/wrinkle.hpp"

namespace wrinkle::testing {

inline std::filesystem::path data_dir() { return WRINKLE_TEST_DATA_DIR; }

/// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("wrinkle_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Uniform random image on the 8-bit grid.
inline Image random_image(std::uint64_t seed, int h, int w, int c) {
  Xoshiro256 rng(seed, 0x1A6E);
  Image img(h, w, c);
  for (double& v : img.data) v = from_byte(static_cast<std::uint8_t>(rng.uniform_int(0, 255)));
  return img;
}

/// Uniform random image with continuous values in [0, 1).
inline Image random_continuous_image(std::uint64_t seed, int h, int w, int c) {
  Xoshiro256 rng(seed, 0xC0);
  Image img(h, w, c);
  for (double& v : img.data) v = rng.uniform();
  return img;
}

/// Closed-form d/du of a * sin(omega * pi * d) with d the distance to
/// (cu, cv); the single-source, zero-decay large-scale wrinkle.
inline double analytic_du(double a, double omega, double cu, double cv, double u, double v) {
  const double du = u - cu;
  const double dv = v - cv;
  const double d = std::sqrt(du * du + dv * dv);
  return a * omega * std::numbers::pi * std::cos(omega * std::numbers::pi * d) * du / d;
}

/// Always answers with a fixed probability vector.
class ConstantOracle final : public Oracle {
 public:
  explicit ConstantOracle(std::vector<double> probs) : probs_{std::move(probs)} {}
  ProbVector predict(const Image&) const override {
    ++calls;
    return probs_;
  }
  std::optional<std::size_t> num_classes() const override { return probs_.size(); }
  std::string model_id() const override { return "constant"; }
  nlohmann::json descriptor() const override { return {{"kind", "constant"}}; }
  mutable std::atomic<int> calls{0};

 private:
  ProbVector probs_;
};

/// Delegates to another oracle, then fails every call after `ok_calls`.
class FlakyOracle final : public Oracle {
 public:
  FlakyOracle(const Oracle& inner, int ok_calls) : inner_(inner), ok_calls_(ok_calls) {}
  ProbVector predict(const Image& x) const override {
    if (calls_++ >= ok_calls_) throw OracleError("flaky oracle: connection reset");
    return inner_.predict(x);
  }
  std::optional<std::size_t> num_classes() const override { return inner_.num_classes(); }
  std::string model_id() const override { return "flaky"; }
  nlohmann::json descriptor() const override { return {{"kind", "flaky"}}; }

 private:
  const Oracle& inner_;
  int ok_calls_;
  mutable std::atomic<int> calls_{0};
};

/// Returns probabilities that do not sum to one.
class BrokenOracle final : public Oracle {
 public:
  ProbVector predict(const Image&) const override { return ProbVector{{0.7, 0.7}}; }
  std::string model_id() const override { return "broken"; }
  nlohmann::json descriptor() const override { return {{"kind", "broken"}}; }
};

/// Fixed learned-distance backend.
class FixedMetric final : public PerceptualMetric {
 public:
  explicit FixedMetric(double d) : d_(d) {}
  double distance(const Image&, const Image&) const override { return d_; }
  std::string name() const override { return "fixed"; }

 private:
  double d_;
};

/// Attack configuration with small budgets for fast unit tests.
inline AttackConfig small_config(int budget = 40, std::uint64_t seed = 1) {
  AttackConfig cfg;
  cfg.ga.population = 8;
  cfg.ga.budget = budget;
  cfg.ga.seed = seed;
  return cfg;
}

}  // namespace wrinkle::testing

namespace wrinkle::testing {

inline WrinkleGene reference_gene() {
  std::ifstream in(data_dir() / "reference_gene.json");
  return nlohmann::json::parse(in).get<WrinkleGene>();
}

/// Worst-case deviation of the numerical u-derivative of a single large-scale
/// source (decay 0) from its closed form, over interior pixels farther than
/// 0.05 from the center. Normalized by the largest analytic magnitude on the
/// grid, since the pointwise ratio is undefined where the derivative crosses
/// zero.
inline double gradient_check_error(int n = 512) {
  const double a = 0.6;
  const double omega = 2.0;
  const Center c{0.37, 0.58};
  ScaleParams p{a, 1, 0.0, omega, omega};
  const WrinkleField z = scale_component({n, n}, p, {c}, Scale::Large);
  const DisplacementField disp = displacement_field(z, 1.0, 1.0);
  double worst = 0.0;
  double peak = 0.0;
  for (int i = 1; i < n - 1; ++i) {
    const double v = (i + 0.5) / n;
    for (int j = 1; j < n - 1; ++j) {
      const double u = (j + 0.5) / n;
      const double d = std::hypot(u - c.u, v - c.v);
      if (d <= 0.05) continue;
      const double ana_u = analytic_du(a, omega, c.u, c.v, u, v);
      const double ana_v = analytic_du(a, omega, c.v, c.u, v, u);
      peak = std::max({peak, std::abs(ana_u), std::abs(ana_v)});
      worst = std::max({worst, std::abs(disp.du.at(i, j) - ana_u),
                        std::abs(disp.dv.at(i, j) - ana_v)});
    }
  }
  return worst / peak;
}

}  // namespace wrinkle::testing
