#include <gtest/gtest.h>

#include <thread>

#include "fake_server.hpp"
#include "support.hpp"

using namespace wrinkle;
using wrinkle::testing::FakeServer;
using json = nlohmann::json;

namespace {

constexpr InputSize k64{64, 64};

/// Class 0 rewards brightness everywhere, class 1 darkness. On a white image
/// the logit gap is 2 * 64 * 0.1 = 12.8, so p(bright) = 1 / (1 + e^-12.8).
LinearOracle bright_oracle() {
  return LinearOracle({std::vector<double>(64, 0.1), std::vector<double>(64, -0.1)}, {},
                      k64, "bright-dark");
}

/// Image whose pooled features are 0.5 except cell a (1.0) and cell b (0.0).
Image two_cell_image(int a, int b) {
  Image x(64, 64, 1, 0.5);
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) {
      const int cell = (i / 8) * 8 + j / 8;
      if (cell == a) x.at(i, j) = 1.0;
      if (cell == b) x.at(i, j) = 0.0;
    }
  return x;
}

RemoteEndpoint fast(const std::string& url, int retries = 1) {
  return RemoteEndpoint{url, 2.0, retries};
}

}  // namespace

TEST(Softmax, SymmetricLogits) {
  const ProbVector p = softmax({0.0, 0.0});
  EXPECT_EQ(p.values[0], 0.5);
  EXPECT_EQ(p.values[1], 0.5);
  const ProbVector big = softmax({1000.0, 0.0, -1000.0});
  EXPECT_TRUE(big.is_valid());
  EXPECT_EQ(big.argmax(), 0u);
}

TEST(LinearOracleTest, WhiteImageIsBright) {
  const LinearOracle o = bright_oracle();
  const ProbVector p = o.predict(Image(64, 64, 3, 1.0));
  EXPECT_GT(p.values[0], 0.99);
  EXPECT_NEAR(p.values[0], 1.0 / (1.0 + std::exp(-12.8)), 1e-12);
}

TEST(LinearOracleTest, PooledFeaturesAverageCells) {
  Image x(16, 16, 3, 0.0);
  for (int c = 0; c < 3; ++c) x.at(0, 0, c) = 0.9;  // top-left cell is 2x2 pixels
  const auto f = pooled_features(x);
  EXPECT_NEAR(f[0], 0.9 / 4, 1e-15);
  for (std::size_t k = 1; k < f.size(); ++k) EXPECT_EQ(f[k], 0.0);
}

TEST(ToyOracle, DeterministicPerSeed) {
  const LinearOracle a = build_toy_oracle(5, 4, k64);
  const LinearOracle b = build_toy_oracle(5, 4, k64);
  const LinearOracle c = build_toy_oracle(6, 4, k64);
  EXPECT_EQ(a.weights(), b.weights());
  EXPECT_NE(a.weights(), c.weights());
  for (std::uint64_t s = 0; s < 5; ++s) {
    const Image x = wrinkle::testing::random_continuous_image(s, 64, 64, 3);
    EXPECT_EQ(a.predict(x), b.predict(x));
  }
}

TEST(ToyOracle, UniformGrayGivesUniformProbs) {
  for (int k : {2, 3, 4}) {
    const LinearOracle o = build_toy_oracle(17, k, k64);
    for (const auto& row : o.weights()) {
      double sum = 0;
      for (double w : row) sum += w;
      EXPECT_NEAR(sum, 0.0, 1e-12);
    }
    const ProbVector p = o.predict(Image(64, 64, 3, 0.5));
    for (double v : p.values) EXPECT_NEAR(v, 1.0 / k, 1e-12);
  }
}

TEST(ToyOracle, SwappingOpposedCellsFlipsArgmax) {
  // With every other feature at 0.5 and zero-sum rows, the logits are
  // 0.5 * (w[a] - w[b]); swapping the two cells negates them.
  const LinearOracle o = build_toy_oracle(3, 4, k64);
  const auto& w = o.weights();
  int a = 0, b = 1;
  double best = -1;
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) {
      const double gap = std::abs((w[0][i] - w[0][j]) - (w[1][i] - w[1][j]));
      if (i != j && gap > best) best = gap, a = i, b = j;
    }
  const auto before = o.predict(two_cell_image(a, b)).argmax();
  const auto after = o.predict(two_cell_image(b, a)).argmax();
  EXPECT_NE(before, after);
  const auto logits = o.logits(two_cell_image(a, b));
  const auto swapped = o.logits(two_cell_image(b, a));
  for (std::size_t c = 0; c < logits.size(); ++c)
    EXPECT_NEAR(logits[c], -swapped[c], 1e-12);
}

TEST(QuadrantOracle, BrightQuadrantWins) {
  const LinearOracle o = build_quadrant_oracle(40.0, k64);
  for (int q = 0; q < 4; ++q) {
    Image x(64, 64, 3, 0.3);
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j)
        for (int c = 0; c < 3; ++c) x.at(i + 32 * (q / 2), j + 32 * (q % 2), c) = 0.8;
    EXPECT_EQ(o.predict(x).argmax(), static_cast<std::size_t>(q));
  }
}

TEST(LinearOracleTest, JsonRoundTripAndErrors) {
  const LinearOracle toy = build_toy_oracle(9, 3, k64);
  const LinearOracle again = linear_oracle_from_json(toy.descriptor());
  EXPECT_EQ(again.weights(), toy.weights());
  const LinearOracle table = linear_oracle_from_json(toy.weights_json());
  EXPECT_EQ(table.weights(), toy.weights());
  EXPECT_THROW(linear_oracle_from_json(json{{"input_height", 64}}), UsageError);
  EXPECT_THROW(LinearOracle({std::vector<double>(64, 0.0)}, {}, k64), UsageError);
  EXPECT_THROW(LinearOracle({std::vector<double>(63), std::vector<double>(63)}, {}, k64),
               UsageError);
  EXPECT_THROW(load_linear_oracle("/nonexistent/oracle.json"), IoError);
}

TEST(Ledger, CountsEveryQueryAndStopsAtBudget) {
  const LinearOracle o = bright_oracle();
  QueryLedger ledger(3);
  const Image x(64, 64, 1, 0.4);
  for (int k = 0; k < 3; ++k) ledger.predict(o, x);
  EXPECT_EQ(ledger.used(), 3);
  EXPECT_EQ(ledger.latencies().size(), 3u);
  EXPECT_THROW(ledger.predict(o, x), BudgetExhausted);
  EXPECT_EQ(ledger.used(), 3);
}

TEST(Ledger, AtomicUnderContention) {
  QueryLedger ledger(10007);
  std::atomic<std::int64_t> granted{0};
  std::vector<std::jthread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] {
      for (;;) {
        const auto g = ledger.acquire(1 + t % 3);
        if (g == 0) break;
        granted += g;
      }
    });
  threads.clear();
  EXPECT_EQ(granted.load(), 10007);
  EXPECT_EQ(ledger.used(), 10007);
  EXPECT_EQ(ledger.remaining(), 0);
}

TEST(Ledger, RejectsInvalidProbabilities) {
  wrinkle::testing::BrokenOracle broken;
  QueryLedger ledger(5);
  EXPECT_THROW(ledger.predict(broken, Image(8, 8, 1)), OracleError);
}

// ---------------------------------------------------------------------------
// Remote protocol

TEST(RemoteProtocol, PredictPassesProbabilitiesThrough) {
  FakeServer server;
  json seen;
  server.http().Post("/v1/predict", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    res.set_content(R"({"probs": [0.2, 0.8], "model_id": "echo-1"})", "application/json");
  });
  const std::string url = server.start();
  const RemoteOracle o(fast(url), {"cat", "dog"});
  const Image x = wrinkle::testing::random_image(1, 12, 10, 3);
  const ProbVector p = o.predict(x);
  EXPECT_EQ(p.values, (std::vector<double>{0.2, 0.8}));
  EXPECT_EQ(o.model_id(), "echo-1");
  EXPECT_EQ(seen.at("labels"), (json{"cat", "dog"}));
  EXPECT_EQ(seen.at("image_png_b64").get<std::string>(), detail::png_b64(x));
  EXPECT_EQ(o.descriptor().at("kind"), "remote");
}

TEST(RemoteProtocol, UrlPrefixIsKept) {
  FakeServer server;
  server.http().Post("/api/v1/predict", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"probs": [0.6, 0.4], "model_id": "m"})", "application/json");
  });
  const std::string url = server.start();
  const RemoteOracle o(fast(url + "/api/"));
  EXPECT_EQ(o.predict(Image(8, 8, 3, 0.5)).argmax(), 0u);
}

TEST(RemoteProtocol, InvalidResponsesAreErrors) {
  FakeServer server;
  std::string reply;
  server.http().Post("/v1/predict", [&](const httplib::Request&, httplib::Response& res) {
    res.set_content(reply, "application/json");
  });
  const std::string url = server.start();
  const RemoteOracle o(fast(url), {"a", "b"});
  const Image x(8, 8, 3, 0.5);
  for (const char* bad : {R"({"probs": [0.7, 0.7], "model_id": "m"})",
                          R"({"probs": [0.5, 0.25, 0.25], "model_id": "m"})",
                          R"({"model_id": "m"})", R"({"probs": "nope"})", "not json"}) {
    reply = bad;
    EXPECT_THROW(o.predict(x), OracleError) << bad;
  }
}

TEST(RemoteProtocol, ClientErrorsAreNotRetried) {
  FakeServer server;
  server.http().Post("/v1/predict", [&](const httplib::Request&, httplib::Response& res) {
    ++server.hits;
    res.status = 400;
    res.set_content(R"({"error": "bad image"})", "application/json");
  });
  const std::string url = server.start();
  const RemoteOracle o(fast(url, 3));
  EXPECT_THROW(o.predict(Image(8, 8, 3)), OracleError);
  EXPECT_EQ(server.hits.load(), 1);
}

TEST(RemoteProtocol, ServerErrorsAreRetried) {
  FakeServer server;
  server.http().Post("/v1/predict", [&](const httplib::Request&, httplib::Response& res) {
    if (server.hits++ == 0) {
      res.status = 503;
      return;
    }
    res.set_content(R"({"probs": [0.1, 0.9], "model_id": "m"})", "application/json");
  });
  const std::string url = server.start();
  const RemoteOracle o(fast(url, 1));
  EXPECT_EQ(o.predict(Image(8, 8, 3)).argmax(), 1u);
  EXPECT_EQ(server.hits.load(), 2);
}

TEST(RemoteProtocol, UnreachableServerFailsAfterRetries) {
  std::string url;
  {
    FakeServer server;
    url = server.start();
  }  // port released
  const RemoteOracle o(RemoteEndpoint{url, 0.5, 1});
  EXPECT_THROW(o.predict(Image(8, 8, 3)), OracleError);
}

TEST(RemoteProtocol, MalformedEndpoints) {
  EXPECT_THROW(RemoteOracle(RemoteEndpoint{"localhost:8000", 1, 0}), UsageError);
  EXPECT_THROW(RemoteOracle(RemoteEndpoint{"ftp://host", 1, 0}), UsageError);
  EXPECT_THROW(RemoteOracle(RemoteEndpoint{"http://host", 0, 0}), UsageError);
  EXPECT_THROW(RemoteOracle(RemoteEndpoint{"http://", 1, 0}), UsageError);
}

TEST(RemoteProtocol, PerceptualDistanceReplay) {
  // Recorded distance for the fixture pair, replayed by the fake backend.
  constexpr double kRecorded = 0.1834;
  FakeServer server;
  json seen;
  server.http().Post("/v1/perceptual", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    const bool same = seen.at("image_a_png_b64") == seen.at("image_b_png_b64");
    res.set_content(json{{"distance", same ? 0.0 : kRecorded}}.dump(), "application/json");
  });
  const std::string url = server.start();
  const RemotePerceptual metric(fast(url));
  const Image a = load_image(wrinkle::testing::data_dir() / "fixture_scene.png");
  const Image b = load_image(wrinkle::testing::data_dir() / "golden_render.png");
  EXPECT_EQ(metric.distance(a, b), kRecorded);
  EXPECT_LE(metric.distance(a, a), 1e-3);
  EXPECT_EQ(seen.at("image_b_png_b64").get<std::string>(), detail::png_b64(a));

  PerceptualConfig cfg;
  cfg.backend = PerceptualBackend::External;
  cfg.alpha1 = 0.7;
  const double s = ssim(a, b, cfg);
  EXPECT_DOUBLE_EQ(perceptual_similarity(a, b, cfg, &metric),
                   std::clamp(0.3 * s + 0.7 * (1 - kRecorded), 0.0, 1.0));
  EXPECT_EQ(perceptual_similarity(a, a, cfg, &metric), 1.0);
}

TEST(RemoteProtocol, PerceptualOutOfRangeIsError) {
  FakeServer server;
  server.http().Post("/v1/perceptual", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"distance": 1.7})", "application/json");
  });
  const std::string url = server.start();
  const RemotePerceptual metric(fast(url));
  EXPECT_THROW(metric.distance(Image(8, 8, 3), Image(8, 8, 3)), OracleError);
}

TEST(RemoteProtocol, ConcurrentQueriesThroughLedger) {
  FakeServer server;
  server.http().Post("/v1/predict", [&](const httplib::Request&, httplib::Response& res) {
    ++server.hits;
    res.set_content(R"({"probs": [0.3, 0.7], "model_id": "m"})", "application/json");
  });
  const std::string url = server.start();
  const RemoteOracle o(fast(url));
  QueryLedger ledger(12);
  std::vector<std::jthread> threads;
  std::atomic<int> ok{0};
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&] {
      for (;;) {
        try {
          ledger.predict(o, Image(8, 8, 3, 0.2));
          ++ok;
        } catch (const BudgetExhausted&) {
          return;
        }
      }
    });
  threads.clear();
  EXPECT_EQ(ok.load(), 12);
  EXPECT_EQ(server.hits.load(), 12);
}
