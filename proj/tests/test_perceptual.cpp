#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"

using namespace wrinkle;
using wrinkle::testing::data_dir;
using wrinkle::testing::FixedMetric;
using wrinkle::testing::random_continuous_image;

namespace {

PerceptualConfig external(double alpha1) {
  PerceptualConfig cfg;
  cfg.alpha1 = alpha1;
  cfg.backend = PerceptualBackend::External;
  return cfg;
}

}  // namespace

TEST(Ssim, SelfSimilarityIsExactlyOne) {
  const PerceptualConfig cfg;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Image x = random_continuous_image(s, 11 + s, 13 + 2 * s, s % 2 ? 3 : 1);
    EXPECT_EQ(ssim(x, x, cfg), 1.0);
  }
  const Image flat(16, 16, 3, 0.0);
  EXPECT_EQ(ssim(flat, flat, cfg), 1.0);
}

TEST(Ssim, ConstantPairMatchesClosedForm) {
  const PerceptualConfig cfg;
  const double expect = (2 * 0.2 * 0.8 + cfg.c1) / (0.2 * 0.2 + 0.8 * 0.8 + cfg.c1);
  EXPECT_NEAR(ssim(Image(16, 16, 3, 0.2), Image(16, 16, 3, 0.8), cfg), expect, 1e-9);
  EXPECT_NEAR(ssim(Image(24, 12, 1, 0.2), Image(24, 12, 1, 0.8), cfg), expect, 1e-9);
  EXPECT_LT(expect, 1.0);
}

TEST(Ssim, MatchesReferenceImplementation) {
  std::ifstream in(data_dir() / "ssim_reference.json");
  const auto refs = nlohmann::json::parse(in);
  ASSERT_EQ(refs.size(), 3u);
  for (const auto& r : refs) {
    const Image a = load_image(data_dir() / r.at("a").get<std::string>());
    const Image b = load_image(data_dir() / r.at("b").get<std::string>());
    EXPECT_NEAR(ssim(a, b, PerceptualConfig{}), r.at("ssim").get<double>(), 1e-4)
        << r.at("a") << " vs " << r.at("b");
  }
}

TEST(Ssim, TinyNoiseStaysNearOne) {
  const Image a = load_image(data_dir() / "gray_a.png");
  const Image b = load_image(data_dir() / "gray_a_noise.png");
  EXPECT_GE(ssim(a, b, PerceptualConfig{}), 0.98);

  const Image x = load_image(data_dir() / "fixture_scene.png");
  Image y = x;
  Xoshiro256 rng(1, 1);
  for (double& v : y.data)
    v = std::clamp(v + (rng.uniform_int(-1, 1)) / 255.0, 0.0, 1.0);
  EXPECT_GE(ssim(x, y, PerceptualConfig{}), 0.98);
}

TEST(Ssim, RejectsMismatchAndTinyImages) {
  const PerceptualConfig cfg;
  EXPECT_THROW(ssim(Image(16, 16, 3), Image(16, 15, 3), cfg), InvariantError);
  EXPECT_THROW(ssim(Image(8, 8, 3), Image(8, 8, 3), cfg), InvariantError);
}

TEST(PerceptualDistance, NoneBackendIsZero) {
  const Image a = random_continuous_image(1, 16, 16, 3);
  const Image b = random_continuous_image(2, 16, 16, 3);
  PerceptualConfig cfg;
  EXPECT_EQ(perceptual_distance(a, b, cfg, nullptr), 0.0);
  EXPECT_EQ(cfg.effective_alpha1(), 0.0);
}

TEST(PerceptualDistance, ExternalBackendChecks) {
  const Image a = random_continuous_image(1, 16, 16, 3);
  EXPECT_THROW(perceptual_distance(a, a, external(0.7), nullptr), OracleError);
  FixedMetric bad(1.5);
  EXPECT_THROW(perceptual_distance(a, a, external(0.7), &bad), OracleError);
  FixedMetric ok(0.25);
  EXPECT_EQ(perceptual_distance(a, a, external(0.7), &ok), 0.25);
}

TEST(PerceptualSimilarity, IdenticalImagesScoreOne) {
  const Image x = load_image(data_dir() / "fixture_scene.png");
  FixedMetric zero(0.0);
  for (double alpha : {0.0, 0.3, 0.7, 1.0}) {
    EXPECT_EQ(perceptual_similarity(x, x, external(alpha), &zero), 1.0);
    PerceptualConfig none;
    none.alpha1 = alpha;
    EXPECT_EQ(perceptual_similarity(x, x, none), 1.0);
  }
}

TEST(PerceptualSimilarity, AlphaZeroIsClampedSsim) {
  const Image a = load_image(data_dir() / "fixture_scene.png");
  const Image b = load_image(data_dir() / "golden_render.png");
  FixedMetric m(0.9);
  const double s = ssim(a, b, PerceptualConfig{});
  EXPECT_EQ(perceptual_similarity(a, b, external(0.0), &m), std::clamp(s, 0.0, 1.0));
  EXPECT_EQ(perceptual_similarity(a, b, PerceptualConfig{}), std::clamp(s, 0.0, 1.0));
}

TEST(PerceptualSimilarity, BlendExample) {
  EXPECT_NEAR(blend_similarity(0.9, 0.2, 0.7), 0.83, 1e-12);
  EXPECT_EQ(blend_similarity(-0.3, 1.0, 0.0), 0.0);
}

TEST(PerceptualSimilarity, MonotoneAndBounded) {
  Xoshiro256 rng(3, 3);
  for (int t = 0; t < 20000; ++t) {
    const double s = rng.uniform(-1.0, 1.0);
    const double d = rng.uniform();
    const double a = rng.uniform();
    const double v = blend_similarity(s, d, a);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    EXPECT_GE(blend_similarity(s + rng.uniform(0.0, 0.5), d, a), v);
    EXPECT_GE(blend_similarity(s, d * rng.uniform(), a), v);
  }
}

TEST(PerceptualConfigTest, Validation) {
  PerceptualConfig c;
  EXPECT_NO_THROW(c.validate());
  c.alpha1 = 1.2;
  EXPECT_THROW(c.validate(), UsageError);
  c = {};
  c.window = 10;
  EXPECT_THROW(c.validate(), UsageError);
  c = {};
  c.c1 = 0;
  EXPECT_THROW(c.validate(), UsageError);
  const PerceptualConfig back = nlohmann::json(external(0.4)).get<PerceptualConfig>();
  EXPECT_EQ(back, external(0.4));
}
