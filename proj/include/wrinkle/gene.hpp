#pragma once

// The searchable perturbation parameters (one "gene") and the box
// constraints the optimizer keeps them inside.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"
#include "wrinkle/error.hpp"
#include "wrinkle/field.hpp"

namespace wrinkle {

struct AppearanceParams {
  double base = 1.0;       // b
  double amplitude = 0.0;  // beta
  double eps_z = 1e-6;

  bool operator==(const AppearanceParams&) const = default;
};

struct WrinkleGene {
  ScaleSet scales{};
  double gamma_u = 0.0;
  double gamma_v = 0.0;
  AppearanceParams appearance{};
  std::uint64_t seed = 0;
  ScaleMask mask{};

  bool operator==(const WrinkleGene&) const = default;
};

/// Zero intensities with unit brightness: renders every image to itself.
inline WrinkleGene identity_gene() {
  WrinkleGene g;
  for (auto& s : g.scales) {
    s.intensity = 0.0;
    s.layers = 1;
  }
  g.appearance.base = 1.0;
  g.appearance.amplitude = 0.0;
  return g;
}

// ---------------------------------------------------------------------------
// Flat coordinate view used by the genetic operators.

inline constexpr std::size_t kGeneDims = 17;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool integer = false;

  double width() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
  bool operator==(const Interval&) const = default;
};

inline constexpr std::array<std::string_view, kGeneDims> kCoordinateNames{
    "L.intensity", "L.layers", "L.decay", "L.freq",
    "M.intensity", "M.layers", "M.decay", "M.freq1", "M.freq2",
    "S.intensity", "S.layers", "S.decay", "S.freq",
    "gamma_u", "gamma_v", "brightness_base", "brightness_amplitude"};

using GeneVector = std::array<double, kGeneDims>;

inline GeneVector to_vector(const WrinkleGene& g) {
  const auto& L = g.scales[0];
  const auto& M = g.scales[1];
  const auto& S = g.scales[2];
  return {L.intensity, double(L.layers), L.decay, L.freq1,
          M.intensity, double(M.layers), M.decay, M.freq1, M.freq2,
          S.intensity, double(S.layers), S.decay, S.freq1,
          g.gamma_u, g.gamma_v, g.appearance.base, g.appearance.amplitude};
}

/// Writes coordinates back into `g`, leaving seed, mask and eps_z untouched.
inline void assign_vector(WrinkleGene& g, const GeneVector& x) {
  auto& L = g.scales[0];
  auto& M = g.scales[1];
  auto& S = g.scales[2];
  auto as_int = [](double v) { return static_cast<int>(std::lround(v)); };
  L.intensity = x[0]; L.layers = as_int(x[1]); L.decay = x[2]; L.freq1 = x[3];
  L.freq2 = x[3];
  M.intensity = x[4]; M.layers = as_int(x[5]); M.decay = x[6]; M.freq1 = x[7];
  M.freq2 = x[8];
  S.intensity = x[9]; S.layers = as_int(x[10]); S.decay = x[11]; S.freq1 = x[12];
  S.freq2 = x[12];
  g.gamma_u = x[13];
  g.gamma_v = x[14];
  g.appearance.base = x[15];
  g.appearance.amplitude = x[16];
}

/// Box constraints over the flat coordinates.
struct SearchBox {
  std::array<Interval, kGeneDims> bounds{};

  /// Intensities, layer counts, displacement gains and brightness ranges are
  /// the published experimental settings; decay and frequency ranges are
  /// local choices.
  static SearchBox defaults() {
    SearchBox box;
    box.bounds = {{
        {0.4, 0.8, false}, {2, 4, true}, {1, 3, false}, {1, 3, false},
        {0.4, 0.8, false}, {4, 6, true}, {2, 5, false}, {2, 6, false}, {2, 6, false},
        {0.3, 0.5, false}, {6, 8, true}, {4, 8, false}, {4, 10, false},
        {0.4, 0.6, false}, {0.4, 0.6, false}, {0.4, 0.8, false}, {0.2, 0.4, false},
    }};
    return box;
  }

  void validate() const {
    for (std::size_t k = 0; k < kGeneDims; ++k) {
      const Interval& iv = bounds[k];
      if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi))
        throw UsageError("search box: empty or inverted range for " +
                         std::string(kCoordinateNames[k]));
      if (iv.integer && (iv.lo != std::floor(iv.lo) || iv.hi != std::floor(iv.hi)))
        throw UsageError("search box: integer range with fractional bounds for " +
                         std::string(kCoordinateNames[k]));
    }
    for (std::size_t k : {1u, 5u, 10u})
      if (bounds[k].lo < 1) throw UsageError("search box: layers must be >= 1");
    for (std::size_t k : {2u, 6u, 11u})
      if (bounds[k].lo < 0) throw UsageError("search box: decay must be >= 0");
    for (std::size_t k : {3u, 7u, 8u, 12u})
      if (bounds[k].lo <= 0) throw UsageError("search box: frequencies must be > 0");
  }

  bool contains(const WrinkleGene& g) const {
    const GeneVector x = to_vector(g);
    for (std::size_t k = 0; k < kGeneDims; ++k)
      if (!bounds[k].contains(x[k])) return false;
    return true;
  }

  bool operator==(const SearchBox&) const = default;
};

// ---------------------------------------------------------------------------
// JSON

inline void to_json(nlohmann::json& j, const ScaleMask& m) {
  j = nlohmann::json{{"L", m.large}, {"M", m.medium}, {"S", m.small}};
}
inline void from_json(const nlohmann::json& j, ScaleMask& m) {
  m.large = j.at("L").get<bool>();
  m.medium = j.at("M").get<bool>();
  m.small = j.at("S").get<bool>();
}

/// Parses "full", "L", "M", "S", "L+M", "M+S", ... into a mask.
inline ScaleMask parse_mask(std::string_view text) {
  if (text == "full") return {};
  ScaleMask m{false, false, false};
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t plus = text.find('+', pos);
    const std::string_view part =
        text.substr(pos, plus == std::string_view::npos ? text.npos : plus - pos);
    if (part == "L") m.large = true;
    else if (part == "M") m.medium = true;
    else if (part == "S") m.small = true;
    else throw UsageError("unknown scale component '" + std::string(part) + "'");
    if (plus == std::string_view::npos) break;
    pos = plus + 1;
  }
  return m;
}

inline std::string mask_name(const ScaleMask& m) {
  if (m.large && m.medium && m.small) return "full";
  std::string out;
  for (Scale s : kScales) {
    if (!m.enabled(s)) continue;
    if (!out.empty()) out += '+';
    out += scale_name(s);
  }
  return out.empty() ? "none" : out;
}

inline void to_json(nlohmann::json& j, const WrinkleGene& g) {
  j = nlohmann::json::object();
  const GeneVector x = to_vector(g);
  for (std::size_t k = 0; k < kGeneDims; ++k) {
    const std::string key(kCoordinateNames[k]);
    if (key.ends_with("layers"))
      j[key] = static_cast<int>(x[k]);
    else
      j[key] = x[k];
  }
  j["eps_z"] = g.appearance.eps_z;
  j["seed"] = g.seed;
  j["mask"] = g.mask;
}

inline void from_json(const nlohmann::json& j, WrinkleGene& g) {
  GeneVector x{};
  for (std::size_t k = 0; k < kGeneDims; ++k)
    x[k] = j.at(std::string(kCoordinateNames[k])).get<double>();
  g = WrinkleGene{};
  assign_vector(g, x);
  g.appearance.eps_z = j.value("eps_z", 1e-6);
  g.seed = j.at("seed").get<std::uint64_t>();
  if (j.contains("mask")) g.mask = j.at("mask").get<ScaleMask>();
}

inline void to_json(nlohmann::json& j, const SearchBox& box) {
  j = nlohmann::json::object();
  for (std::size_t k = 0; k < kGeneDims; ++k)
    j[std::string(kCoordinateNames[k])] = {box.bounds[k].lo, box.bounds[k].hi};
}

/// Missing keys keep their default ranges.
inline void from_json(const nlohmann::json& j, SearchBox& box) {
  box = SearchBox::defaults();
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::size_t k = 0;
    while (k < kGeneDims && kCoordinateNames[k] != it.key()) ++k;
    if (k == kGeneDims) throw UsageError("search box: unknown key " + it.key());
    const auto& pair = it.value();
    if (!pair.is_array() || pair.size() != 2)
      throw UsageError("search box: expected [lo, hi] for " + it.key());
    box.bounds[k].lo = pair[0].get<double>();
    box.bounds[k].hi = pair[1].get<double>();
  }
}

}  // namespace wrinkle
