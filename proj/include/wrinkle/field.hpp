#pragma once

// Multi-scale wrinkle height field: a sum of large-, medium- and small-scale
// components, each a superposition of radially decaying oscillations around
// randomly placed centers.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <vector>

#include "wrinkle/error.hpp"
#include "wrinkle/rng.hpp"

namespace wrinkle {

enum class Scale : int { Large = 0, Medium = 1, Small = 2 };

inline constexpr std::array<Scale, 3> kScales{Scale::Large, Scale::Medium,
                                              Scale::Small};

inline constexpr std::size_t index_of(Scale s) noexcept {
  return static_cast<std::size_t>(s);
}

inline constexpr const char* scale_name(Scale s) noexcept {
  switch (s) {
    case Scale::Large: return "L";
    case Scale::Medium: return "M";
    case Scale::Small: return "S";
  }
  return "?";
}

/// Per-scale wrinkle parameters. `freq2` is only read by the medium scale,
/// whose oscillator mixes a sine and a cosine.
struct ScaleParams {
  double intensity = 0.0;
  int layers = 1;
  double decay = 0.0;
  double freq1 = 1.0;
  double freq2 = 1.0;

  bool operator==(const ScaleParams&) const = default;
};

using ScaleSet = std::array<ScaleParams, 3>;

/// Which scale components contribute to the total field.
struct ScaleMask {
  bool large = true;
  bool medium = true;
  bool small = true;

  constexpr bool enabled(Scale s) const noexcept {
    switch (s) {
      case Scale::Large: return large;
      case Scale::Medium: return medium;
      case Scale::Small: return small;
    }
    return false;
  }
  bool operator==(const ScaleMask&) const = default;
};

struct Center {
  double u = 0.0;
  double v = 0.0;
  bool operator==(const Center&) const = default;
};

/// Wrinkle source centers, one list per scale, in normalized coordinates.
using CenterSet = std::array<std::vector<Center>, 3>;

/// Dense row-major grid sampled at pixel centers u = (j + 0.5) / W,
/// v = (i + 0.5) / H.
template <typename T>
struct Grid {
  int height = 0;
  int width = 0;
  std::vector<T> values;

  Grid() = default;
  Grid(int h, int w, T fill = T{})
      : height(h), width(w), values(static_cast<std::size_t>(h) * w, fill) {}

  T& at(int row, int col) noexcept {
    return values[static_cast<std::size_t>(row) * width + col];
  }
  const T& at(int row, int col) const noexcept {
    return values[static_cast<std::size_t>(row) * width + col];
  }
  bool operator==(const Grid&) const = default;
};

using WrinkleField = Grid<double>;

struct Resolution {
  int height = 0;
  int width = 0;
};

/// Draws K_s centers per scale, uniform on [0,1)^2. Scale s reads its own
/// xoshiro256** stream (seed, stream = s), so the centers of one scale do not
/// depend on the layer counts of the others.
inline CenterSet sample_centers(const ScaleSet& params, std::uint64_t seed) {
  CenterSet centers;
  for (Scale s : kScales) {
    const ScaleParams& p = params[index_of(s)];
    if (p.layers < 1) throw InvariantError("sample_centers: layers must be >= 1");
    Xoshiro256 rng(seed, index_of(s));
    auto& list = centers[index_of(s)];
    list.reserve(static_cast<std::size_t>(p.layers));
    for (int k = 0; k < p.layers; ++k) {
      const double u = rng.uniform();
      const double v = rng.uniform();
      list.push_back({u, v});
    }
  }
  return centers;
}

/// Scale-specific oscillation profile phi_s(d), bounded by [-1, 1].
inline double oscillator(Scale scale, double d, const ScaleParams& p) noexcept {
  constexpr double pi = std::numbers::pi;
  switch (scale) {
    case Scale::Large:
    case Scale::Small:
      return std::sin(p.freq1 * pi * d);
    case Scale::Medium:
      return 0.5 * (std::sin(p.freq1 * pi * d) + std::cos(p.freq2 * pi * d));
  }
  return 0.0;
}

/// z_s(u,v) = sum_k a_s * phi_s(d_k) * exp(-lambda_s * d_k), with d_k the
/// Euclidean distance to center k in normalized coordinates.
inline WrinkleField scale_component(Resolution res, const ScaleParams& p,
                                    const std::vector<Center>& centers,
                                    Scale scale) {
  if (res.height <= 0 || res.width <= 0)
    throw InvariantError("scale_component: empty resolution");
  WrinkleField field(res.height, res.width, 0.0);
  for (int i = 0; i < res.height; ++i) {
    const double v = (i + 0.5) / res.height;
    for (int j = 0; j < res.width; ++j) {
      const double u = (j + 0.5) / res.width;
      double z = 0.0;
      for (const Center& c : centers) {
        const double du = u - c.u;
        const double dv = v - c.v;
        const double d = std::sqrt(du * du + dv * dv);
        z += p.intensity * oscillator(scale, d, p) * std::exp(-p.decay * d);
      }
      field.at(i, j) = z;
    }
  }
  return field;
}

/// Element-wise sum of the enabled scale components, in L, M, S order.
inline WrinkleField total_field(const ScaleSet& params, const CenterSet& centers,
                                Resolution res, ScaleMask mask = {}) {
  WrinkleField total(res.height, res.width, 0.0);
  for (Scale s : kScales) {
    if (!mask.enabled(s)) continue;
    const auto& p = params[index_of(s)];
    const auto& list = centers[index_of(s)];
    if (list.size() != static_cast<std::size_t>(p.layers))
      throw InvariantError("total_field: center count does not match layers");
    const WrinkleField part = scale_component(res, p, list, s);
    for (std::size_t k = 0; k < total.values.size(); ++k)
      total.values[k] += part.values[k];
  }
  return total;
}

}  // namespace wrinkle
