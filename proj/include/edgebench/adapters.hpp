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

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "edgebench/catalog.hpp"

namespace edgebench {

/// Monotonic clock reading in nanoseconds.
std::int64_t monotonic_now_ns();
/// UTC wall-clock reading in nanoseconds since the Unix epoch.
std::int64_t utc_now_ns();

struct Timeouts {
  std::chrono::milliseconds connect{5000};
  std::chrono::milliseconds inter_chunk{120000};
  std::chrono::milliseconds health{2000};
};

struct RuntimeEndpoint {
  RuntimeKind kind = RuntimeKind::ollama_native;
  /// scheme://host:port with an optional path prefix.
  std::string base_url;
  std::string chat_path;

  /// Fills in the kind's default port and chat path.
  static RuntimeEndpoint with_defaults(RuntimeKind kind, std::string_view host = "127.0.0.1");
};

int default_port(RuntimeKind kind);
std::string_view default_chat_path(RuntimeKind kind);

struct ParsedUrl {
  std::string scheme;
  std::string host;
  int port = 0;
  std::string path_prefix;  // no trailing '/'
};

/// Accepts http URLs only; throws ConfigError otherwise.
ParsedUrl parse_base_url(std::string_view url);

using Scalar = std::variant<bool, std::int64_t, double, std::string>;

struct InferenceRequest {
  std::string model_id;  // the runtime's model name
  std::string prompt;
  int max_new_tokens = 100;
  bool stream = true;
  std::map<std::string, Scalar> decode_params;

  void validate() const;
};

/// Ollama chat request body: model, single user message, stream, and
/// options.num_predict plus the decode parameters.
std::string chat_request_body(const InferenceRequest& request);

struct ServerCounters {
  std::int64_t eval_count = 0;
  std::int64_t eval_duration_ns = 0;

  friend bool operator==(const ServerCounters&, const ServerCounters&) = default;
};

struct TokenEvent {
  std::int64_t recv_monotonic_ns = 0;
  std::string text_fragment;
  bool is_final = false;
  std::optional<ServerCounters> server_reported;

  friend bool operator==(const TokenEvent&, const TokenEvent&) = default;
};

using TokenSink = std::function<void(const TokenEvent&)>;

enum class StreamFailure {
  none,
  connect,      // could not reach the endpoint
  timeout,      // connect or inter-chunk deadline exceeded
  transport,    // connection dropped mid-stream
  http_status,  // non-2xx; body in error_body (e.g. model not found)
  protocol,     // malformed chunk or events after the final chunk
  unsupported,  // adapter has no protocol implementation
};

std::string_view to_string(StreamFailure f);

struct StreamCompletion {
  std::size_t total_events = 0;
  bool transport_ok = false;
  bool saw_final = false;
  StreamFailure failure = StreamFailure::none;
  int http_status = 0;
  std::string error;
  std::string error_body;

  bool ok() const { return transport_ok && saw_final && failure == StreamFailure::none; }
  /// HTTP 404 from the runtime: the model is not available on this endpoint.
  bool model_not_found() const {
    return failure == StreamFailure::http_status && http_status == 404;
  }
};

/// One decoded NDJSON chat chunk.
struct ChatChunk {
  std::string content;
  bool done = false;
  std::optional<ServerCounters> counters;
  std::optional<std::string> error;
};

/// Throws ParseError on malformed JSON or a chunk without message/done.
ChatChunk decode_chat_chunk(std::string_view line);

/// Splits a byte stream into newline-terminated lines; blank lines dropped.
class LineSplitter {
 public:
  /// Appends bytes and returns every line completed by them.
  std::vector<std::string> feed(std::string_view bytes);
  /// Whatever is left without a terminating newline.
  std::string take_remainder();
  bool has_remainder() const;

 private:
  std::string buffer_;
};

/// Streaming inference client for one endpoint. Usable from one task at a
/// time.
class StreamingClient {
 public:
  virtual ~StreamingClient() = default;

  /// Every chunk is stamped on receipt, before parsing, and forwarded to
  /// `sink` in arrival order. Failures are reported in the completion
  /// rather than thrown.
  virtual StreamCompletion chat_stream(const InferenceRequest& request,
                                       const TokenSink& sink) = 0;

  /// True iff the runtime's version route answers within the health timeout.
  virtual bool health_check() = 0;

  virtual const RuntimeEndpoint& endpoint() const = 0;
};

/// Ollama-compatible NDJSON client (native Ollama, Hailo Ollama, mock).
class OllamaClient final : public StreamingClient {
 public:
  OllamaClient(RuntimeEndpoint endpoint, Timeouts timeouts = {});

  StreamCompletion chat_stream(const InferenceRequest& request,
                               const TokenSink& sink) override;
  bool health_check() override;
  const RuntimeEndpoint& endpoint() const override { return endpoint_; }

 private:
  RuntimeEndpoint endpoint_;
  ParsedUrl url_;
  Timeouts timeouts_;
};

/// Slot for the M5Stack StackFlow runtime, whose protocol is undocumented.
/// Always reports `unsupported`.
class StackFlowStubClient final : public StreamingClient {
 public:
  explicit StackFlowStubClient(RuntimeEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

  StreamCompletion chat_stream(const InferenceRequest& request,
                               const TokenSink& sink) override;
  bool health_check() override { return false; }
  const RuntimeEndpoint& endpoint() const override { return endpoint_; }

 private:
  RuntimeEndpoint endpoint_;
};

std::unique_ptr<StreamingClient> make_client(const RuntimeEndpoint& endpoint,
                                             const Timeouts& timeouts = {});

/// Warnings (e.g. eval_count mismatches) go here; defaults to stderr.
using WarningHandler = std::function<void(std::string_view)>;
void set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace edgebench
