// Copyright 2026 The promptbo Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#include "promptbo/http_backend.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "promptbo/error.hpp"

namespace promptbo {

namespace {

using nlohmann::json;

// Splits "http://host:port/base" into ("http://host:port", "/base").
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos)
    throw ConfigError("backend.endpoint", "expected scheme://host[:port][/path]");
  const auto path_start = endpoint.find('/', scheme_end + 3);
  std::string base = endpoint.substr(0, path_start);
  std::string path = path_start == std::string::npos ? "" : endpoint.substr(path_start);
  while (!path.empty() && path.back() == '/') path.pop_back();
  return {base, path};
}

class SemaphoreGuard {
 public:
  explicit SemaphoreGuard(std::counting_semaphore<>& s) : s_(s) { s_.acquire(); }
  ~SemaphoreGuard() { s_.release(); }
  SemaphoreGuard(const SemaphoreGuard&) = delete;
  SemaphoreGuard& operator=(const SemaphoreGuard&) = delete;

 private:
  std::counting_semaphore<>& s_;
};

}  // namespace

HttpBackend::HttpBackend(BackendConfig config, ExtractionRules rules)
    : config_(std::move(config)), rules_(std::move(rules)) {
  config_.kind = BackendKind::http;
  config_.validate();
  std::tie(scheme_host_port_, path_) = split_endpoint(config_.endpoint);
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  }
  in_flight_ = std::make_unique<std::counting_semaphore<>>(config_.max_in_flight);
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::request_body(const std::string& model, double temperature,
                                      const std::string& system, const std::string& user) {
  json body = {{"model", model},
               {"temperature", temperature},
               {"messages",
                json::array({{{"role", "system"}, {"content", system}},
                             {{"role", "user"}, {"content", user}}})}};
  return body.dump();
}

std::string HttpBackend::response_content(const std::string& body) {
  try {
    const auto parsed = json::parse(body);
    return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception& e) {
    throw BackendError(std::string("malformed chat response: ") + e.what());
  }
}

std::string HttpBackend::chat(const std::string& system, const std::string& user) {
  SemaphoreGuard guard(*in_flight_);
  const std::string body = request_body(config_.model_name, config_.temperature, system, user);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  const auto timeout = config_.request_timeout;
  const auto sec = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout - sec);

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0 && config_.retry_backoff.count() > 0)
      std::this_thread::sleep_for(config_.retry_backoff * (1 << std::min(attempt - 1, 6)));
    attempts_.fetch_add(1, std::memory_order_relaxed);

    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(sec.count(), usec.count());
    client.set_read_timeout(sec.count(), usec.count());
    client.set_write_timeout(sec.count(), usec.count());
    auto res = client.Post(path_ + "/chat/completions", headers, body, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "server error " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw BackendError("request rejected with status " + std::to_string(res->status) + ": " +
                         res->body);
    return response_content(res->body);
  }
  throw BackendError("giving up after " + std::to_string(config_.max_retries + 1) +
                     " attempts: " + last_error);
}

int HttpBackend::do_classify(const Prompt& prompt, const Example& example) {
  return extract_label(chat(prompt.text(), example.text), rules_);
}

std::string HttpBackend::do_complete(const CompletionRequest& request) {
  return chat(request.system, request.user);
}

}  // namespace promptbo
