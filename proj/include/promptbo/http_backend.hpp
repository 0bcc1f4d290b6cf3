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

#pragma once

#include <memory>
#include <semaphore>
#include <string>

#include "promptbo/annotator.hpp"

namespace promptbo {

/// Chat-completion client. Each call POSTs to `{endpoint}/chat/completions`
/// with a system message and a user message; the first choice's content is
/// returned (complete) or mapped through extract_label (classify).
///
/// Transport errors and 5xx responses are retried up to max_retries times;
/// 4xx responses fail immediately. At most max_in_flight requests are
/// outstanding at once.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(BackendConfig config, ExtractionRules rules = {});
  ~HttpBackend() override;

  /// Request body for one chat call.
  static std::string request_body(const std::string& model, double temperature,
                                  const std::string& system, const std::string& user);
  /// First choice's message content; throws BackendError on a malformed body.
  static std::string response_content(const std::string& body);

  /// Number of HTTP attempts made so far (including retries).
  std::uint64_t attempts() const noexcept { return attempts_.load(); }

 protected:
  int do_classify(const Prompt& prompt, const Example& example) override;
  std::string do_complete(const CompletionRequest& request) override;

 private:
  std::string chat(const std::string& system, const std::string& user);

  BackendConfig config_;
  ExtractionRules rules_;
  std::string scheme_host_port_;
  std::string path_;
  std::string api_key_;
  std::unique_ptr<std::counting_semaphore<>> in_flight_;
  std::atomic<std::uint64_t> attempts_{0};
};

}  // namespace promptbo
