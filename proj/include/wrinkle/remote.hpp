#pragma once

// HTTP JSON client side of the oracle protocol:
//
//   POST /v1/predict     {"image_png_b64": "...", "labels": ["..."]}
//                        -> {"probs": [..], "model_id": "..."}
//   POST /v1/perceptual  {"image_a_png_b64": "...", "image_b_png_b64": "..."}
//                        -> {"distance": d}

#include <chrono>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "wrinkle/error.hpp"
#include "wrinkle/image_io.hpp"
#include "wrinkle/oracle.hpp"
#include "wrinkle/perceptual.hpp"

namespace wrinkle {

struct RemoteEndpoint {
  std::string url = "http://127.0.0.1:8000";
  double timeout_s = 30.0;
  int retries = 2;

  bool operator==(const RemoteEndpoint&) const = default;
};

namespace detail {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string prefix;  // path prefix without trailing slash
};

inline SplitUrl split_url(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos || scheme == 0)
    throw UsageError("remote endpoint must look like http://host:port, got '" + url + "'");
  if (url.compare(0, scheme, "http") != 0)
    throw UsageError("remote endpoint: only http:// is supported");
  const auto slash = url.find('/', scheme + 3);
  SplitUrl out;
  out.origin = url.substr(0, slash);
  if (out.origin.size() <= scheme + 3)
    throw UsageError("remote endpoint: missing host in '" + url + "'");
  if (slash != std::string::npos) out.prefix = url.substr(slash);
  while (!out.prefix.empty() && out.prefix.back() == '/') out.prefix.pop_back();
  return out;
}

inline std::string png_b64(const Image& img) {
  return httplib::detail::base64_encode(encode_png(img));
}

/// POSTs JSON with retries on transport failures and 5xx replies. 4xx
/// replies are final.
inline nlohmann::json post_json(const RemoteEndpoint& ep, const std::string& path,
                                const nlohmann::json& body) {
  const SplitUrl url = split_url(ep.url);
  const std::string payload = body.dump();
  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= ep.retries; ++attempt) {
    httplib::Client client(url.origin);
    const auto timeout = std::chrono::duration<double>(ep.timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    auto res = client.Post(url.prefix + path, payload, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw OracleError(ep.url + path + ": HTTP " + std::to_string(res->status) +
                        " " + res->body);
    try {
      return nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
      throw OracleError(ep.url + path + ": malformed JSON response: " + e.what());
    }
  }
  throw OracleError(ep.url + path + ": unreachable after " +
                    std::to_string(ep.retries + 1) + " attempts (" + last_error + ")");
}

}  // namespace detail

/// Oracle backed by a model server speaking the JSON protocol above.
class RemoteOracle final : public Oracle {
 public:
  explicit RemoteOracle(RemoteEndpoint ep, std::vector<std::string> labels = {},
                        std::optional<InputSize> input = std::nullopt)
      : ep_(std::move(ep)), labels_(std::move(labels)), input_(input) {
    if (!(ep_.timeout_s > 0)) throw UsageError("remote oracle: timeout must be > 0");
    if (ep_.retries < 0) throw UsageError("remote oracle: retries must be >= 0");
    detail::split_url(ep_.url);
  }

  ProbVector predict(const Image& x) const override {
    nlohmann::json body{{"image_png_b64", detail::png_b64(x)}};
    if (!labels_.empty()) body["labels"] = labels_;
    const nlohmann::json reply = detail::post_json(ep_, "/v1/predict", body);
    ProbVector p;
    try {
      p.values = reply.at("probs").get<std::vector<double>>();
      if (reply.contains("model_id")) {
        std::lock_guard lock(mutex_);
        model_id_ = reply.at("model_id").get<std::string>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw OracleError(std::string("remote oracle: malformed response: ") + e.what());
    }
    if (!labels_.empty() && p.size() != labels_.size())
      throw OracleError("remote oracle: probability count differs from label count");
    return require_valid_probs(p);
  }

  std::optional<InputSize> input_size() const override { return input_; }
  std::optional<std::size_t> num_classes() const override {
    if (labels_.empty()) return std::nullopt;
    return labels_.size();
  }

  std::string model_id() const override {
    std::lock_guard lock(mutex_);
    return model_id_;
  }

  nlohmann::json descriptor() const override {
    nlohmann::json j{{"kind", "remote"}, {"url", ep_.url},
                     {"timeout_s", ep_.timeout_s}, {"retries", ep_.retries},
                     {"model_id", model_id()}};
    if (!labels_.empty()) j["labels"] = labels_;
    if (input_) {
      j["input_height"] = input_->height;
      j["input_width"] = input_->width;
    }
    return j;
  }

 private:
  RemoteEndpoint ep_;
  std::vector<std::string> labels_;
  std::optional<InputSize> input_;
  mutable std::mutex mutex_;
  mutable std::string model_id_ = "unknown";
};

/// Learned perceptual distance served by the /v1/perceptual endpoint.
class RemotePerceptual final : public PerceptualMetric {
 public:
  explicit RemotePerceptual(RemoteEndpoint ep) : ep_(std::move(ep)) {
    detail::split_url(ep_.url);
  }

  double distance(const Image& a, const Image& b) const override {
    const nlohmann::json body{{"image_a_png_b64", detail::png_b64(a)},
                              {"image_b_png_b64", detail::png_b64(b)}};
    const nlohmann::json reply = detail::post_json(ep_, "/v1/perceptual", body);
    double d = 0.0;
    try {
      d = reply.at("distance").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw OracleError(std::string("perceptual backend: malformed response: ") + e.what());
    }
    if (!(d >= 0.0 && d <= 1.0))
      throw OracleError("perceptual backend: distance outside [0, 1]");
    return d;
  }

  std::string name() const override { return "remote:" + ep_.url; }

 private:
  RemoteEndpoint ep_;
};

}  // namespace wrinkle
