#pragma once

// Black-box classifier access. The optimizer only ever sees predict(); every
// call is metered by a QueryLedger that enforces the per-image budget.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wrinkle/error.hpp"
#include "wrinkle/fitness.hpp"
#include "wrinkle/image.hpp"
#include "wrinkle/rng.hpp"

namespace wrinkle {

/// Numerically stable softmax.
inline ProbVector softmax(const std::vector<double>& logits) {
  if (logits.empty()) throw InvariantError("softmax: empty logits");
  const double top = *std::max_element(logits.begin(), logits.end());
  ProbVector p;
  p.values.resize(logits.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    p.values[k] = std::exp(logits[k] - top);
    sum += p.values[k];
  }
  for (double& v : p.values) v /= sum;
  return p;
}

struct InputSize {
  int height = 0;
  int width = 0;
  bool operator==(const InputSize&) const = default;
};

/// A classifier queried as a black box. predict() must be callable from
/// several threads at once.
class Oracle {
 public:
  virtual ~Oracle() = default;

  virtual ProbVector predict(const Image& x) const = 0;

  /// Resolution the classifier expects, when it has one; callers resize.
  virtual std::optional<InputSize> input_size() const { return std::nullopt; }

  /// Number of classes when known up front.
  virtual std::optional<std::size_t> num_classes() const { return std::nullopt; }

  virtual std::string model_id() const = 0;

  /// Enough to rebuild this oracle (for run manifests).
  virtual nlohmann::json descriptor() const = 0;
};

/// Validates an oracle response; never clamps or renormalizes.
inline const ProbVector& require_valid_probs(const ProbVector& p) {
  if (!p.is_valid())
    throw OracleError("oracle returned an invalid probability vector");
  return p;
}

// ---------------------------------------------------------------------------
// Built-in linear-softmax classifier

inline constexpr int kPoolGrid = 8;
inline constexpr int kPoolFeatures = kPoolGrid * kPoolGrid;

/// 8x8 mean-pooled grayscale features. Pixel (i, j) falls in cell
/// (floor(8 i / H), floor(8 j / W)).
inline std::vector<double> pooled_features(const Image& x) {
  const Image gray = luminance(x);
  std::vector<double> sums(kPoolFeatures, 0.0);
  std::vector<int> counts(kPoolFeatures, 0);
  for (int i = 0; i < gray.height; ++i) {
    const int ci = i * kPoolGrid / gray.height;
    for (int j = 0; j < gray.width; ++j) {
      const int cj = j * kPoolGrid / gray.width;
      sums[ci * kPoolGrid + cj] += gray.at(i, j);
      ++counts[ci * kPoolGrid + cj];
    }
  }
  for (int k = 0; k < kPoolFeatures; ++k)
    sums[k] = counts[k] > 0 ? sums[k] / counts[k] : 0.0;
  return sums;
}

/// logits = W * features + bias over 64 pooled features.
class LinearOracle final : public Oracle {
 public:
  LinearOracle(std::vector<std::vector<double>> weights, std::vector<double> bias,
               InputSize input, std::string id = "builtin-linear",
               nlohmann::json source = nullptr)
      : weights_(std::move(weights)), bias_(std::move(bias)), input_(input),
        id_(std::move(id)), source_(std::move(source)) {
    if (weights_.size() < 2) throw UsageError("linear oracle: need K >= 2 classes");
    if (bias_.empty()) bias_.assign(weights_.size(), 0.0);
    if (bias_.size() != weights_.size())
      throw UsageError("linear oracle: bias length differs from class count");
    for (const auto& row : weights_) {
      if (row.size() != kPoolFeatures)
        throw UsageError("linear oracle: each weight row needs 64 entries");
      for (double w : row)
        if (!std::isfinite(w)) throw UsageError("linear oracle: non-finite weight");
    }
    for (double b : bias_)
      if (!std::isfinite(b)) throw UsageError("linear oracle: non-finite bias");
    if (input_.height < kMinImageEdge || input_.width < kMinImageEdge)
      throw UsageError("linear oracle: input size must be at least 8x8");
  }

  std::vector<double> logits(const Image& x) const {
    const auto f = pooled_features(x);
    std::vector<double> out(weights_.size());
    for (std::size_t c = 0; c < weights_.size(); ++c) {
      double acc = bias_[c];
      for (int k = 0; k < kPoolFeatures; ++k) acc += weights_[c][k] * f[k];
      out[c] = acc;
    }
    return out;
  }

  ProbVector predict(const Image& x) const override {
    ProbVector p = softmax(logits(x));
    return require_valid_probs(p);
  }

  std::optional<InputSize> input_size() const override { return input_; }
  std::optional<std::size_t> num_classes() const override { return weights_.size(); }
  std::string model_id() const override { return id_; }

  const std::vector<std::vector<double>>& weights() const noexcept { return weights_; }
  const std::vector<double>& bias() const noexcept { return bias_; }

  /// The full weight table, loadable by linear_oracle_from_json.
  nlohmann::json weights_json() const {
    return {{"kind", "builtin-linear"}, {"model_id", id_},
            {"input_height", input_.height}, {"input_width", input_.width},
            {"weights", weights_}, {"bias", bias_}};
  }

  nlohmann::json descriptor() const override {
    if (!source_.is_null()) return source_;
    return weights_json();
  }

 private:
  std::vector<std::vector<double>> weights_;
  std::vector<double> bias_;
  InputSize input_;
  std::string id_;
  nlohmann::json source_;
};

/// Seeded random linear classifier. Each weight row is drawn from N(0, 4^2)
/// on xoshiro256** (seed, stream 0x0AC1E) and then centered to sum to zero,
/// so uniform gray inputs score every class equally and only the spatial
/// arrangement of brightness moves the prediction.
inline LinearOracle build_toy_oracle(std::uint64_t seed, int classes,
                                     InputSize input) {
  if (classes < 2) throw UsageError("toy oracle: need K >= 2 classes");
  Xoshiro256 rng(seed, 0x0AC1E);
  std::vector<std::vector<double>> w(static_cast<std::size_t>(classes),
                                     std::vector<double>(kPoolFeatures));
  for (auto& row : w) {
    double mean = 0.0;
    for (double& v : row) {
      v = 4.0 * rng.normal();
      mean += v;
    }
    mean /= kPoolFeatures;
    for (double& v : row) v -= mean;
  }
  nlohmann::json source{{"kind", "builtin-linear"}, {"generator", "toy"},
                        {"seed", seed}, {"classes", classes},
                        {"input_height", input.height},
                        {"input_width", input.width}};
  return LinearOracle(std::move(w), std::vector<double>(classes, 0.0), input,
                      "builtin-toy-" + std::to_string(seed), std::move(source));
}

/// Four-class "brightest quadrant" classifier: class q weighs +gain on the
/// 16 cells of quadrant q (0 top-left, 1 top-right, 2 bottom-left,
/// 3 bottom-right) and -gain/3 elsewhere. Rows sum to zero.
inline LinearOracle build_quadrant_oracle(double gain, InputSize input) {
  std::vector<std::vector<double>> w(4, std::vector<double>(kPoolFeatures));
  for (int q = 0; q < 4; ++q)
    for (int ci = 0; ci < kPoolGrid; ++ci)
      for (int cj = 0; cj < kPoolGrid; ++cj) {
        const int cell_q = (ci >= kPoolGrid / 2 ? 2 : 0) + (cj >= kPoolGrid / 2 ? 1 : 0);
        w[q][ci * kPoolGrid + cj] = cell_q == q ? gain : -gain / 3.0;
      }
  nlohmann::json source{{"kind", "builtin-linear"}, {"generator", "quadrant"},
                        {"gain", gain}, {"input_height", input.height},
                        {"input_width", input.width}};
  return LinearOracle(std::move(w), std::vector<double>(4, 0.0), input,
                      "builtin-quadrant", std::move(source));
}

/// Rebuilds a builtin oracle from a descriptor: either a generator record
/// (toy / quadrant) or a full weight table.
inline LinearOracle linear_oracle_from_json(const nlohmann::json& j) {
  try {
    const InputSize input{j.at("input_height").get<int>(),
                          j.at("input_width").get<int>()};
    const std::string gen = j.value("generator", "");
    if (gen == "toy")
      return build_toy_oracle(j.at("seed").get<std::uint64_t>(),
                              j.at("classes").get<int>(), input);
    if (gen == "quadrant")
      return build_quadrant_oracle(j.at("gain").get<double>(), input);
    if (!gen.empty()) throw UsageError("unknown builtin oracle generator " + gen);
    return LinearOracle(j.at("weights").get<std::vector<std::vector<double>>>(),
                        j.value("bias", std::vector<double>{}), input,
                        j.value("model_id", std::string("builtin-linear")));
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("malformed builtin oracle descriptor: ") + e.what());
  }
}

inline LinearOracle load_linear_oracle(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read oracle weights " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("malformed oracle weights " + path.string() + ": " + e.what());
  }
  return linear_oracle_from_json(j);
}

// ---------------------------------------------------------------------------
// Query accounting

/// Counts oracle queries against a fixed budget. acquire() is a single
/// atomic check-and-increment, so concurrent workers never overshoot.
class QueryLedger {
 public:
  explicit QueryLedger(std::int64_t budget) : budget_(budget) {
    if (budget < 0) throw UsageError("query budget must be >= 0");
  }

  /// Reserves up to `n` queries; returns how many were granted.
  std::int64_t acquire(std::int64_t n) {
    std::int64_t used = used_.load(std::memory_order_relaxed);
    for (;;) {
      const std::int64_t grant = std::clamp<std::int64_t>(budget_ - used, 0, n);
      if (grant == 0) return 0;
      if (used_.compare_exchange_weak(used, used + grant,
                                      std::memory_order_acq_rel))
        return grant;
    }
  }

  /// Acquires one query, runs it, records its latency.
  ProbVector predict(const Oracle& oracle, const Image& x) {
    if (acquire(1) != 1) throw BudgetExhausted("query budget exhausted");
    return predict_reserved(oracle, x);
  }

  /// Runs a query already paid for with acquire().
  ProbVector predict_reserved(const Oracle& oracle, const Image& x) {
    const auto t0 = std::chrono::steady_clock::now();
    ProbVector p = oracle.predict(x);
    const auto dt = std::chrono::steady_clock::now() - t0;
    {
      std::lock_guard lock(mutex_);
      latencies_.push_back(std::chrono::duration<double>(dt).count());
    }
    require_valid_probs(p);
    return p;
  }

  std::int64_t used() const noexcept { return used_.load(); }
  std::int64_t budget() const noexcept { return budget_; }
  std::int64_t remaining() const noexcept { return budget_ - used(); }

  std::vector<double> latencies() const {
    std::lock_guard lock(mutex_);
    return latencies_;
  }

 private:
  std::int64_t budget_;
  std::atomic<std::int64_t> used_{0};
  mutable std::mutex mutex_;
  std::vector<double> latencies_;
};

}  // namespace wrinkle
