#pragma once

// Perceptual similarity: Gaussian-window SSIM computed natively, blended with
// an optional learned perceptual distance supplied by an external backend.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "wrinkle/error.hpp"
#include "wrinkle/image.hpp"

namespace wrinkle {

enum class PerceptualBackend { None, External };

struct PerceptualConfig {
  double alpha1 = 0.7;
  int window = 11;
  double sigma = 1.5;
  double c1 = (0.01 * 1.0) * (0.01 * 1.0);
  double c2 = (0.03 * 1.0) * (0.03 * 1.0);
  PerceptualBackend backend = PerceptualBackend::None;

  /// Without a backend the learned term is unavailable and weighs nothing.
  double effective_alpha1() const noexcept {
    return backend == PerceptualBackend::None ? 0.0 : alpha1;
  }

  void validate() const {
    if (!(alpha1 >= 0.0 && alpha1 <= 1.0))
      throw UsageError("perceptual: alpha1 must lie in [0, 1]");
    if (window < 3 || window % 2 == 0)
      throw UsageError("perceptual: SSIM window must be odd and >= 3");
    if (!(sigma > 0)) throw UsageError("perceptual: sigma must be > 0");
    if (!(c1 > 0 && c2 > 0)) throw UsageError("perceptual: C1, C2 must be > 0");
  }

  bool operator==(const PerceptualConfig&) const = default;
};

/// Learned perceptual distance in [0, 1] (the LPIPS role). Implementations
/// must be safe to call concurrently.
class PerceptualMetric {
 public:
  virtual ~PerceptualMetric() = default;
  virtual double distance(const Image& a, const Image& b) const = 0;
  virtual std::string name() const = 0;
};

namespace detail {

inline std::vector<double> gaussian_taps(int window, double sigma) {
  std::vector<double> taps(static_cast<std::size_t>(window));
  const int radius = window / 2;
  double sum = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    const double w = std::exp(-0.5 * k * k / (sigma * sigma));
    taps[static_cast<std::size_t>(k + radius)] = w;
    sum += w;
  }
  for (double& w : taps) w /= sum;
  return taps;
}

// Separable 'valid' filtering: output is (H - n + 1) x (W - n + 1).
inline std::vector<double> filter_valid(const std::vector<double>& src, int h,
                                        int w, const std::vector<double>& taps) {
  const int n = static_cast<int>(taps.size());
  const int oh = h - n + 1;
  const int ow = w - n + 1;
  std::vector<double> rows(static_cast<std::size_t>(h) * ow);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < ow; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += taps[k] * src[i * w + j + k];
      rows[i * ow + j] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int i = 0; i < oh; ++i)
    for (int j = 0; j < ow; ++j) {
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += taps[k] * rows[(i + k) * ow + j];
      out[i * ow + j] = acc;
    }
  return out;
}

}  // namespace detail

/// Mean SSIM over every full Gaussian window of the luminance images
/// (channel mean for RGB). Uses population statistics.
inline double ssim(const Image& a, const Image& b, const PerceptualConfig& cfg) {
  if (a.height != b.height || a.width != b.width)
    throw InvariantError("ssim: images differ in size");
  if (a.height < cfg.window || a.width < cfg.window)
    throw InvariantError("ssim: image smaller than the SSIM window");

  const Image la = luminance(a);
  const Image lb = luminance(b);
  const int h = a.height;
  const int w = a.width;
  const std::size_t n = la.data.size();
  std::vector<double> aa(n), bb(n), ab(n);
  for (std::size_t k = 0; k < n; ++k) {
    aa[k] = la.data[k] * la.data[k];
    bb[k] = lb.data[k] * lb.data[k];
    ab[k] = la.data[k] * lb.data[k];
  }
  const auto taps = detail::gaussian_taps(cfg.window, cfg.sigma);
  const auto mu_a = detail::filter_valid(la.data, h, w, taps);
  const auto mu_b = detail::filter_valid(lb.data, h, w, taps);
  const auto e_aa = detail::filter_valid(aa, h, w, taps);
  const auto e_bb = detail::filter_valid(bb, h, w, taps);
  const auto e_ab = detail::filter_valid(ab, h, w, taps);

  double total = 0.0;
  for (std::size_t k = 0; k < mu_a.size(); ++k) {
    const double ma = mu_a[k];
    const double mb = mu_b[k];
    const double var_a = e_aa[k] - ma * ma;
    const double var_b = e_bb[k] - mb * mb;
    const double cov = e_ab[k] - ma * mb;
    const double num = (2 * ma * mb + cfg.c1) * (2 * cov + cfg.c2);
    const double den = (ma * ma + mb * mb + cfg.c1) * (var_a + var_b + cfg.c2);
    total += num / den;
  }
  return total / static_cast<double>(mu_a.size());
}

/// Learned perceptual distance; zero when no backend is configured.
inline double perceptual_distance(const Image& a, const Image& b,
                                  const PerceptualConfig& cfg,
                                  const PerceptualMetric* metric) {
  if (cfg.backend == PerceptualBackend::None) return 0.0;
  if (metric == nullptr)
    throw OracleError("perceptual: external backend configured but not attached");
  const double d = metric->distance(a, b);
  if (!(d >= 0.0 && d <= 1.0))
    throw OracleError("perceptual: backend distance outside [0, 1]");
  return d;
}

/// (1 - alpha1) * SSIM + alpha1 * (1 - distance), clamped to [0, 1].
/// Written as SSIM + alpha1 * ((1 - distance) - SSIM) so that identical
/// images give exactly 1 and alpha1 = 0 gives exactly SSIM.
inline double blend_similarity(double ssim_value, double distance, double alpha1) {
  const double learned = 1.0 - distance;
  return std::clamp(ssim_value + alpha1 * (learned - ssim_value), 0.0, 1.0);
}

inline double perceptual_similarity(const Image& a, const Image& b,
                                    const PerceptualConfig& cfg,
                                    const PerceptualMetric* metric = nullptr) {
  const double s = ssim(a, b, cfg);
  const double alpha = cfg.effective_alpha1();
  const double d = alpha > 0.0 ? perceptual_distance(a, b, cfg, metric) : 0.0;
  return blend_similarity(s, d, alpha);
}

NLOHMANN_JSON_SERIALIZE_ENUM(PerceptualBackend,
                             {{PerceptualBackend::None, "none"},
                              {PerceptualBackend::External, "external"}})

inline void to_json(nlohmann::json& j, const PerceptualConfig& c) {
  j = nlohmann::json{{"alpha1", c.alpha1}, {"window", c.window},
                     {"sigma", c.sigma},   {"c1", c.c1},
                     {"c2", c.c2},         {"backend", c.backend}};
}
inline void from_json(const nlohmann::json& j, PerceptualConfig& c) {
  const PerceptualConfig d;
  c.alpha1 = j.value("alpha1", d.alpha1);
  c.window = j.value("window", d.window);
  c.sigma = j.value("sigma", d.sigma);
  c.c1 = j.value("c1", d.c1);
  c.c2 = j.value("c2", d.c2);
  c.backend = j.value("backend", d.backend);
}

}  // namespace wrinkle
