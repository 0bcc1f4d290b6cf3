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

#include <doctest.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "promptbo/error.hpp"
#include "promptbo/http_backend.hpp"

using namespace promptbo;

namespace {

// Local chat endpoint on an ephemeral port.
class FakeServer {
 public:
  explicit FakeServer(httplib::Server::Handler handler) {
    server_.Post("/v1/chat/completions", std::move(handler));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

std::string reply(const std::string& content) {
  return nlohmann::json{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump();
}

BackendConfig config_for(const FakeServer& s) {
  BackendConfig c;
  c.kind = BackendKind::http;
  c.endpoint = s.endpoint();
  c.model_name = "test-model";
  c.max_retries = 2;
  c.retry_backoff = std::chrono::milliseconds(1);
  c.request_timeout = std::chrono::milliseconds(2000);
  return c;
}

}  // namespace

TEST_CASE("request and response bodies") {
  const auto body = nlohmann::json::parse(HttpBackend::request_body("m", 0.0, "sys", "usr"));
  CHECK(body["model"] == "m");
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][1]["content"] == "usr");
  CHECK(HttpBackend::response_content(reply("hi")) == "hi");
  CHECK_THROWS_AS(HttpBackend::response_content("{}"), BackendError);
  CHECK_THROWS_AS(HttpBackend::response_content("nope"), BackendError);
}

TEST_CASE("config checks") {
  BackendConfig c;
  c.kind = BackendKind::http;
  CHECK_THROWS_AS(HttpBackend{c}, ConfigError);
  c.endpoint = "localhost:80";
  c.model_name = "m";
  CHECK_THROWS_AS(HttpBackend{c}, ConfigError);
}

TEST_CASE("classify and complete through a local server") {
  std::string seen_auth, seen_system;
  FakeServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    const auto body = nlohmann::json::parse(req.body);
    seen_system = body["messages"][0]["content"];
    res.set_content(reply(body["messages"][1]["content"] == "claim" ? "Yes, it is true." : "plain text"),
                    "application/json");
  });
  ::setenv("PROMPTBO_TEST_KEY", "secret", 1);
  auto cfg = config_for(server);
  cfg.api_key_env = "PROMPTBO_TEST_KEY";
  HttpBackend b(cfg);
  CHECK(b.classify(Prompt("judge"), Example{"x", "claim", 1}) == 1);
  CHECK(seen_auth == "Bearer secret");
  CHECK(seen_system == "judge");
  CompletionRequest r;
  r.system = "s";
  r.user = "other";
  CHECK(b.complete(r) == "plain text");
  CHECK(b.counts().classify == 1);
  CHECK(b.counts().complete == 1);
}

TEST_CASE("server errors are retried, client errors are not") {
  std::atomic<int> hits{0};
  FakeServer flaky([&](const httplib::Request&, httplib::Response& res) {
    if (hits.fetch_add(1) < 2) {
      res.status = 503;
      return;
    }
    res.set_content(reply("no"), "application/json");
  });
  HttpBackend b(config_for(flaky));
  CHECK(b.classify(Prompt("p"), Example{"x", "t", 0}) == 0);
  CHECK(b.attempts() == 3);

  std::atomic<int> rejected{0};
  FakeServer bad([&](const httplib::Request&, httplib::Response& res) {
    rejected.fetch_add(1);
    res.status = 400;
  });
  HttpBackend b2(config_for(bad));
  CHECK_THROWS_AS(b2.classify(Prompt("p"), Example{"x", "t", 0}), BackendError);
  CHECK(rejected == 1);

  FakeServer down([&](const httplib::Request&, httplib::Response& res) { res.status = 500; });
  HttpBackend b3(config_for(down));
  CHECK_THROWS_AS(b3.classify(Prompt("p"), Example{"x", "t", 0}), BackendError);
  CHECK(b3.attempts() == 3);
}

TEST_CASE("slow responses time out") {
  FakeServer slow([&](const httplib::Request&, httplib::Response& res) {
    std::this_thread::sleep_for(std::chrono::milliseconds(400));
    res.set_content(reply("yes"), "application/json");
  });
  auto cfg = config_for(slow);
  cfg.request_timeout = std::chrono::milliseconds(100);
  cfg.max_retries = 0;
  HttpBackend b(cfg);
  CHECK_THROWS_AS(b.classify(Prompt("p"), Example{"x", "t", 0}), BackendError);
}
