// Copyright 2026 The AdvCat Authors
// SPDX-License-Identifier: Apache-2.0

#include <cstdlib>

#include "advcat/oracle.hpp"
#include "httplib.h"
#include "json.hpp"

namespace advcat {

namespace {

using nlohmann::json;

class RemoteBackend final : public ModelBackend {
 public:
  RemoteBackend(std::string url, double timeout_s) : url_(std::move(url)), timeout_s_(timeout_s) {
    if (const char* env = std::getenv("ADVCAT_REMOTE_TIMEOUT")) {
      char* end = nullptr;
      const double t = std::strtod(env, &end);
      if (end == env || *end != '\0' || !(t > 0.0)) {
        throw std::invalid_argument("ADVCAT_REMOTE_TIMEOUT must be a positive number of seconds");
      }
      timeout_s_ = t;
    }
    if (!(timeout_s_ > 0.0)) throw std::invalid_argument("remote timeout must be positive");
    auto cli = client();
    auto res = cli.Get("/v1/info");
    const json body = checked(res, "/v1/info");
    try {
      classes_ = body.at("num_classes").get<std::size_t>();
      features_ = body.at("num_features").get<std::size_t>();
    } catch (const json::exception& e) {
      throw OracleError(std::string("malformed /v1/info response: ") + e.what());
    }
    if (classes_ < 2) throw OracleError("remote model reports fewer than two classes");
  }

  std::size_t num_classes() const override { return classes_; }
  std::size_t num_features() const override { return features_; }

  ProbabilityVector evaluate(std::span<const ValueIndex> values) const override {
    json req = {{"values", std::vector<ValueIndex>(values.begin(), values.end())}};
    auto cli = client();
    auto res = cli.Post("/v1/query", req.dump(), "application/json");
    const json body = checked(res, "/v1/query");
    try {
      return body.at("probs").get<ProbabilityVector>();
    } catch (const json::exception& e) {
      throw OracleError(std::string("malformed /v1/query response: ") + e.what());
    }
  }

  std::vector<ProbabilityVector> evaluate_batch(
      const std::vector<std::vector<ValueIndex>>& batch) const override {
    json req = {{"values_batch", batch}};
    auto cli = client();
    auto res = cli.Post("/v1/query_batch", req.dump(), "application/json");
    const json body = checked(res, "/v1/query_batch");
    try {
      return body.at("probs_batch").get<std::vector<ProbabilityVector>>();
    } catch (const json::exception& e) {
      throw OracleError(std::string("malformed /v1/query_batch response: ") + e.what());
    }
  }

  std::string describe() const override { return "remote:" + url_; }

 private:
  httplib::Client client() const {
    httplib::Client cli(url_);
    const auto sec = static_cast<time_t>(timeout_s_);
    const auto usec = static_cast<time_t>((timeout_s_ - static_cast<double>(sec)) * 1e6);
    cli.set_connection_timeout(sec, usec);
    cli.set_read_timeout(sec, usec);
    cli.set_write_timeout(sec, usec);
    return cli;
  }

  static json checked(const httplib::Result& res, const char* route) {
    if (!res) {
      throw OracleError(std::string("remote oracle unreachable at ") + route + ": " +
                        httplib::to_string(res.error()));
    }
    if (res->status != 200) {
      throw OracleError(std::string("remote oracle returned status ") +
                        std::to_string(res->status) + " for " + route);
    }
    try {
      return json::parse(res->body);
    } catch (const json::parse_error& e) {
      throw OracleError(std::string("remote oracle sent invalid JSON: ") + e.what());
    }
  }

  std::string url_;
  double timeout_s_;
  std::size_t classes_ = 0;
  std::size_t features_ = 0;
};

}  // namespace

std::shared_ptr<const ModelBackend> make_remote_backend(const std::string& url, double timeout_s) {
  return std::make_shared<RemoteBackend>(url, timeout_s);
}

}  // namespace advcat
