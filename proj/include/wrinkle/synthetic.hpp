#pragma once

// Desk-scale synthetic scenes for the built-in quadrant classifier: a tinted
// background with a faint texture, a few soft distractor blobs, and one bright
// blob that marks the labelled quadrant.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "wrinkle/harness.hpp"
#include "wrinkle/image.hpp"
#include "wrinkle/image_io.hpp"
#include "wrinkle/rng.hpp"

namespace wrinkle {

inline constexpr const char* kQuadrantNames[4] = {"top-left", "top-right",
                                                  "bottom-left", "bottom-right"};

/// 8-bit-quantized RGB scene whose brightest blob sits in `quadrant`
/// (0 top-left, 1 top-right, 2 bottom-left, 3 bottom-right).
inline Image quadrant_scene(std::uint64_t seed, int quadrant, int size = 64) {
  Xoshiro256 rng(seed, 0x5CE);
  Image x(size, size, 3);
  double base[3];
  for (double& b : base) b = rng.uniform(0.25, 0.45);
  const double gx = rng.uniform(-0.1, 0.1);
  const double gy = rng.uniform(-0.1, 0.1);

  struct Blob {
    double u, v, sigma;
    double amp[3];
  };
  std::vector<Blob> blobs;
  for (int k = 0; k < 3; ++k) {
    Blob b{rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.06, 0.15), {}};
    for (double& a : b.amp) a = rng.uniform(-0.15, 0.15);
    blobs.push_back(b);
  }
  Blob key{(quadrant % 2 ? 0.75 : 0.25) + rng.uniform(-0.08, 0.08),
           (quadrant / 2 ? 0.75 : 0.25) + rng.uniform(-0.08, 0.08),
           rng.uniform(0.12, 0.18), {}};
  for (double& a : key.amp) a = rng.uniform(0.35, 0.5);
  blobs.push_back(key);

  for (int i = 0; i < size; ++i) {
    const double v = (i + 0.5) / size;
    for (int j = 0; j < size; ++j) {
      const double u = (j + 0.5) / size;
      for (int c = 0; c < 3; ++c) {
        double val = base[c] + gx * (u - 0.5) + gy * (v - 0.5) +
                     0.03 * std::sin(40 * u + 7 * c) * std::sin(31 * v);
        for (const Blob& b : blobs) {
          const double d2 = (u - b.u) * (u - b.u) + (v - b.v) * (v - b.v);
          val += b.amp[c] * std::exp(-d2 / (2 * b.sigma * b.sigma));
        }
        x.at(i, j, c) = val;
      }
    }
  }
  return quantize(clamp_unit(x));
}

/// Writes `count` scenes (labels cycling through the quadrants) plus
/// index.csv into `dir`.
inline Dataset write_quadrant_dataset(const std::filesystem::path& dir, int count,
                                      std::uint64_t seed, int size = 64) {
  std::filesystem::create_directories(dir);
  Dataset ds{dir, {}};
  for (int n = 0; n < count; ++n) {
    const int q = n % 4;
    char name[32];
    std::snprintf(name, sizeof name, "scene_%03d.png", n);
    save_image(quadrant_scene(mix64(seed + static_cast<std::uint64_t>(n)), q, size),
               dir / name);
    ds.entries.push_back({name, static_cast<std::size_t>(q), kQuadrantNames[q]});
  }
  write_dataset_index(ds);
  return ds;
}

}  // namespace wrinkle
