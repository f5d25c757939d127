// Copyright 2026 The edgebench Authors
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

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edgebench/kv_config.hpp"

namespace edgebench {

/// Timing behaviour of one simulated model.
struct MockProfile {
  std::string model_id;
  double ttft_ms = 0.0;
  double tokens_per_s = 10.0;
  /// Added to the first request for this model only.
  double first_request_load_ms = 0.0;
  /// Each inter-token gap is scaled by a uniform factor in [1 - j, 1 + j].
  double jitter_pct = 0.0;
  std::uint64_t seed = 0;
  /// Drop the connection after this many tokens.
  std::optional<int> fail_after_tokens;
  /// Emit at most this many tokens regardless of num_predict.
  std::optional<int> max_tokens;

  void validate() const;
};

std::vector<MockProfile> load_mock_profiles(const std::string& path);
std::vector<MockProfile> mock_profiles_from_table(const kv::Table& root, const std::string& source);

/// Text of the k-th generated token.
std::string mock_token_text(std::size_t k);

/// Ollama-compatible streaming server driven by MockProfiles. Runs on a
/// background thread; stops on destruction.
class MockServer {
 public:
  explicit MockServer(std::vector<MockProfile> profiles);
  ~MockServer();
  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  /// Binds and starts serving; port 0 picks a free port. Returns the bound
  /// port. Throws TransportError if the bind fails.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  /// Blocks serving on the calling thread (for the CLI).
  void listen_blocking(const std::string& host, int port);
  void stop();

  int port() const;
  std::string base_url() const;
  /// Completed /api/chat requests, including failed ones.
  std::size_t request_count() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Parses "host:port".
std::pair<std::string, int> parse_bind_address(std::string_view bind);

}  // namespace edgebench
