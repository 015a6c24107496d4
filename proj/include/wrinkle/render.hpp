#pragma once

// Wrinkle field -> displacement field -> bilinear backward warp -> brightness
// modulation. render_perturbation composes the whole map.

#include <algorithm>
#include <cmath>
#include <limits>

#include "wrinkle/error.hpp"
#include "wrinkle/field.hpp"
#include "wrinkle/gene.hpp"
#include "wrinkle/image.hpp"

namespace wrinkle {

/// Sampling offsets in normalized units (1.0 spans the full image edge).
struct DisplacementField {
  Grid<double> du;
  Grid<double> dv;

  int height() const noexcept { return du.height; }
  int width() const noexcept { return du.width; }
};

/// Spatial derivative of a field along one axis, central differences in the
/// interior and one-sided at the borders; step 1/W (or 1/H) in normalized
/// units.
inline Grid<double> field_derivative(const WrinkleField& z, bool along_u) {
  Grid<double> out(z.height, z.width, 0.0);
  const int n = along_u ? z.width : z.height;
  if (n < 2) return out;
  const double inv_step = static_cast<double>(n);  // 1 / (1/n)
  for (int i = 0; i < z.height; ++i) {
    for (int j = 0; j < z.width; ++j) {
      const int k = along_u ? j : i;
      auto sample = [&](int t) { return along_u ? z.at(i, t) : z.at(t, j); };
      double g;
      if (k == 0)
        g = (sample(1) - sample(0)) * inv_step;
      else if (k == n - 1)
        g = (sample(n - 1) - sample(n - 2)) * inv_step;
      else
        g = (sample(k + 1) - sample(k - 1)) * (0.5 * inv_step);
      out.at(i, j) = g;
    }
  }
  return out;
}

/// r_u = gamma_u * dz/du, r_v = gamma_v * dz/dv.
inline DisplacementField displacement_field(const WrinkleField& z,
                                            double gamma_u, double gamma_v) {
  DisplacementField disp{field_derivative(z, true), field_derivative(z, false)};
  for (double& r : disp.du.values) r *= gamma_u;
  for (double& r : disp.dv.values) r *= gamma_v;
  return disp;
}

namespace detail {

// Linear interpolation that never leaves [min(a,b), max(a,b)], even under
// rounding; exact at t == 0 and when a == b.
inline double bounded_lerp(double a, double b, double t) noexcept {
  const double r = a + t * (b - a);
  return std::clamp(r, std::min(a, b), std::max(a, b));
}

}  // namespace detail

/// Backward warp: output pixel (i, j) samples the input at its own position
/// shifted by (r_u, r_v). Coordinates beyond the raster clamp to the border.
inline Image warp_image(const Image& x, const DisplacementField& disp) {
  if (disp.height() != x.height || disp.width() != x.width ||
      disp.dv.height != x.height || disp.dv.width != x.width)
    throw InvariantError("warp_image: displacement does not match image");
  Image out(x.height, x.width, x.channels);
  const double max_col = x.width - 1.0;
  const double max_row = x.height - 1.0;
  for (int i = 0; i < x.height; ++i) {
    for (int j = 0; j < x.width; ++j) {
      // Pixel units directly: a zero offset lands exactly on (i, j).
      const double px = std::clamp(j + disp.du.at(i, j) * x.width, 0.0, max_col);
      const double py = std::clamp(i + disp.dv.at(i, j) * x.height, 0.0, max_row);
      const int x0 = static_cast<int>(px);
      const int y0 = static_cast<int>(py);
      const int x1 = std::min(x0 + 1, x.width - 1);
      const int y1 = std::min(y0 + 1, x.height - 1);
      const double fx = px - x0;
      const double fy = py - y0;
      for (int c = 0; c < x.channels; ++c) {
        const double top = detail::bounded_lerp(x.at(y0, x0, c), x.at(y0, x1, c), fx);
        const double bot = detail::bounded_lerp(x.at(y1, x0, c), x.at(y1, x1, c), fx);
        out.at(i, j, c) = detail::bounded_lerp(top, bot, fy);
      }
    }
  }
  return out;
}

/// (z - z_min) / (z_max - z_min + eps_z), values in [0, 1).
inline WrinkleField normalize_field(const WrinkleField& z, double eps_z) {
  if (!(eps_z > 0)) throw InvariantError("normalize_field: eps_z must be > 0");
  WrinkleField out = z;
  if (z.values.empty()) return out;
  const auto [lo, hi] = std::minmax_element(z.values.begin(), z.values.end());
  const double zmin = *lo;
  const double denom = *hi - zmin + eps_z;
  for (double& v : out.values) v = (v - zmin) / denom;
  return out;
}

/// L = b + beta * z_hat.
inline WrinkleField brightness_map(const WrinkleField& z_hat,
                                   const AppearanceParams& app) {
  WrinkleField out = z_hat;
  for (double& v : out.values) v = app.base + app.amplitude * v;
  return out;
}

/// clamp_unit(x_w * L), with L broadcast over channels.
inline Image apply_appearance(const Image& warped, const WrinkleField& light) {
  if (light.height != warped.height || light.width != warped.width)
    throw InvariantError("apply_appearance: brightness map does not match image");
  Image out = warped;
  for (std::size_t p = 0; p < out.pixel_count(); ++p) {
    const double l = light.values[p];
    for (int c = 0; c < out.channels; ++c) {
      double& v = out.data[p * out.channels + c];
      v = std::clamp(v * l, 0.0, 1.0);
    }
  }
  return out;
}

/// Every intermediate of one rendering, for debugging dumps.
struct RenderLayers {
  CenterSet centers;
  WrinkleField field;
  DisplacementField displacement;
  Image warped;
  WrinkleField brightness;
  Image output;
};

inline RenderLayers render_layers(const Image& x, const WrinkleGene& gene) {
  if (!is_valid(x)) throw InvariantError("render: invalid input image");
  RenderLayers r;
  const Resolution res{x.height, x.width};
  r.centers = sample_centers(gene.scales, gene.seed);
  r.field = total_field(gene.scales, r.centers, res, gene.mask);
  r.displacement = displacement_field(r.field, gene.gamma_u, gene.gamma_v);
  r.warped = warp_image(x, r.displacement);
  r.brightness = brightness_map(normalize_field(r.field, gene.appearance.eps_z),
                                gene.appearance);
  r.output = apply_appearance(r.warped, r.brightness);
  return r;
}

/// x' = T_theta(x; xi). Deterministic in (x, gene); the center seed inside the
/// gene fixes the random wrinkle sources.
inline Image render_perturbation(const Image& x, const WrinkleGene& gene) {
  return render_layers(x, gene).output;
}

}  // namespace wrinkle
