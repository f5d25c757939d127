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

#include "edgebench/adapters.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include <iostream>
#include <mutex>

namespace edgebench {

using json = nlohmann::json;

std::int64_t monotonic_now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::int64_t utc_now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

namespace {

std::mutex g_warn_mutex;
WarningHandler g_warn_handler;

}  // namespace

void set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(g_warn_mutex);
  g_warn_handler = std::move(handler);
}

void warn(std::string_view message) {
  std::lock_guard lock(g_warn_mutex);
  if (g_warn_handler) {
    g_warn_handler(message);
  } else {
    std::cerr << "warning: " << message << '\n';
  }
}

int default_port(RuntimeKind kind) {
  switch (kind) {
    case RuntimeKind::ollama_native: return 11434;
    case RuntimeKind::hailo_ollama: return 8000;
    case RuntimeKind::stackflow_stub: return 10001;
    case RuntimeKind::mock: return 11435;
  }
  return 0;
}

std::string_view default_chat_path(RuntimeKind kind) {
  switch (kind) {
    case RuntimeKind::ollama_native:
    case RuntimeKind::hailo_ollama:
    case RuntimeKind::mock:
      return "/api/chat";
    case RuntimeKind::stackflow_stub:
      return "";
  }
  return "";
}

RuntimeEndpoint RuntimeEndpoint::with_defaults(RuntimeKind kind, std::string_view host) {
  RuntimeEndpoint e;
  e.kind = kind;
  e.base_url = fmt::format("http://{}:{}", host, default_port(kind));
  e.chat_path = std::string(default_chat_path(kind));
  return e;
}

ParsedUrl parse_base_url(std::string_view url) {
  ParsedUrl out;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw ConfigError(fmt::format("base_url '{}' has no scheme", url));
  }
  out.scheme = std::string(url.substr(0, scheme_end));
  if (out.scheme != "http") {
    throw ConfigError(fmt::format("base_url '{}': only http is supported", url));
  }
  std::string_view rest = url.substr(scheme_end + 3);
  const auto slash = rest.find('/');
  std::string_view authority = rest.substr(0, slash);
  if (slash != std::string_view::npos) {
    out.path_prefix = std::string(rest.substr(slash));
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') {
      out.path_prefix.pop_back();
    }
  }
  const auto colon = authority.rfind(':');
  if (colon == std::string_view::npos) {
    out.host = std::string(authority);
    out.port = 80;
  } else {
    out.host = std::string(authority.substr(0, colon));
    const std::string port(authority.substr(colon + 1));
    try {
      std::size_t used = 0;
      out.port = std::stoi(port, &used);
      if (used != port.size()) throw std::invalid_argument(port);
    } catch (const std::logic_error&) {
      throw ConfigError(fmt::format("base_url '{}': invalid port", url));
    }
  }
  if (out.host.empty() || out.port <= 0 || out.port > 65535) {
    throw ConfigError(fmt::format("base_url '{}': invalid host or port", url));
  }
  return out;
}

void InferenceRequest::validate() const {
  if (max_new_tokens < 1) throw ValidationError("max_new_tokens", "must be >= 1");
  if (!stream) throw ValidationError("stream", "only streaming requests are supported");
  if (model_id.empty()) throw ValidationError("model", "must not be empty");
}

std::string chat_request_body(const InferenceRequest& r) {
  json options = json::object();
  for (const auto& [key, value] : r.decode_params) {
    std::visit([&options, &key](const auto& v) { options[key] = v; }, value);
  }
  options["num_predict"] = r.max_new_tokens;
  json body = {
      {"model", r.model_id},
      {"messages", json::array({{{"role", "user"}, {"content", r.prompt}}})},
      {"stream", true},
      {"options", std::move(options)},
  };
  return body.dump();
}

std::string_view to_string(StreamFailure f) {
  switch (f) {
    case StreamFailure::none: return "none";
    case StreamFailure::connect: return "connect";
    case StreamFailure::timeout: return "timeout";
    case StreamFailure::transport: return "transport";
    case StreamFailure::http_status: return "http_status";
    case StreamFailure::protocol: return "protocol";
    case StreamFailure::unsupported: return "unsupported";
  }
  return "unknown";
}

ChatChunk decode_chat_chunk(std::string_view line) {
  json j = json::parse(line.begin(), line.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ParseError("chat stream", 0, fmt::format("malformed chunk: {}", line));
  }
  ChatChunk chunk;
  if (auto it = j.find("error"); it != j.end()) {
    chunk.error = it->is_string() ? it->get<std::string>() : it->dump();
    return chunk;
  }
  const auto msg = j.find("message");
  const auto done = j.find("done");
  if (msg == j.end() && done == j.end()) {
    throw ParseError("chat stream", 0, fmt::format("chunk has neither message nor done: {}", line));
  }
  if (done != j.end()) {
    if (!done->is_boolean()) throw ParseError("chat stream", 0, "'done' is not a boolean");
    chunk.done = done->get<bool>();
  }
  if (msg != j.end()) {
    if (!msg->is_object()) throw ParseError("chat stream", 0, "'message' is not an object");
    if (auto c = msg->find("content"); c != msg->end()) {
      if (!c->is_string()) throw ParseError("chat stream", 0, "'message.content' is not a string");
      chunk.content = c->get<std::string>();
    }
  }
  if (chunk.done) {
    auto ec = j.find("eval_count");
    auto ed = j.find("eval_duration");
    if (ec != j.end() && ec->is_number_integer()) {
      ServerCounters counters;
      counters.eval_count = ec->get<std::int64_t>();
      if (ed != j.end() && ed->is_number_integer()) counters.eval_duration_ns = ed->get<std::int64_t>();
      chunk.counters = counters;
    }
  }
  return chunk;
}

std::vector<std::string> LineSplitter::feed(std::string_view bytes) {
  buffer_.append(bytes);
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (true) {
    const auto nl = buffer_.find('\n', start);
    if (nl == std::string::npos) break;
    std::string line = buffer_.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(std::move(line));
    start = nl + 1;
  }
  buffer_.erase(0, start);
  return lines;
}

std::string LineSplitter::take_remainder() {
  std::string out;
  out.swap(buffer_);
  if (!out.empty() && out.back() == '\r') out.pop_back();
  return out;
}

bool LineSplitter::has_remainder() const {
  return buffer_.find_first_not_of(" \t\r") != std::string::npos;
}

OllamaClient::OllamaClient(RuntimeEndpoint endpoint, Timeouts timeouts)
    : endpoint_(std::move(endpoint)),
      url_(parse_base_url(endpoint_.base_url)),
      timeouts_(timeouts) {
  if (endpoint_.chat_path.empty()) endpoint_.chat_path = std::string(default_chat_path(endpoint_.kind));
}

namespace {

httplib::Client make_http_client(const ParsedUrl& url, std::chrono::milliseconds connect,
                                 std::chrono::milliseconds read) {
  httplib::Client cli(url.host, url.port);
  cli.set_connection_timeout(connect);
  cli.set_read_timeout(read);
  cli.set_write_timeout(read);
  cli.set_tcp_nodelay(true);
  cli.set_keep_alive(false);
  return cli;
}

}  // namespace

StreamCompletion OllamaClient::chat_stream(const InferenceRequest& request,
                                           const TokenSink& sink) {
  request.validate();
  StreamCompletion out;
  auto cli = make_http_client(url_, timeouts_.connect, timeouts_.inter_chunk);

  httplib::Request req;
  req.method = "POST";
  req.path = url_.path_prefix + endpoint_.chat_path;
  req.body = chat_request_body(request);
  req.set_header("Content-Type", "application/json");
  req.set_header("Accept", "application/x-ndjson");

  LineSplitter splitter;
  std::int64_t last_chunk_ns = monotonic_now_ns();
  bool any_bytes = false;

  auto process_line = [&](const std::string& line, std::int64_t stamp) -> bool {
    if (out.saw_final) {
      out.failure = StreamFailure::protocol;
      out.error = "chunk received after the final chunk";
      return false;
    }
    ChatChunk chunk;
    try {
      chunk = decode_chat_chunk(line);
    } catch (const ParseError& e) {
      out.failure = StreamFailure::protocol;
      out.error = e.what();
      return false;
    }
    if (chunk.error) {
      out.failure = StreamFailure::protocol;
      out.error = "runtime error: " + *chunk.error;
      return false;
    }
    TokenEvent ev;
    ev.recv_monotonic_ns = stamp;
    ev.text_fragment = std::move(chunk.content);
    ev.is_final = chunk.done;
    ev.server_reported = chunk.counters;
    out.saw_final = ev.is_final;
    ++out.total_events;
    sink(ev);
    return true;
  };

  req.response_handler = [&](const httplib::Response& res) {
    out.http_status = res.status;
    return true;
  };
  req.content_receiver = [&](const char* data, std::size_t n, std::uint64_t, std::uint64_t) {
    const std::int64_t stamp = monotonic_now_ns();
    last_chunk_ns = stamp;
    any_bytes = true;
    if (out.http_status < 200 || out.http_status >= 300) {
      out.error_body.append(data, n);
      return true;
    }
    for (const auto& line : splitter.feed(std::string_view(data, n))) {
      if (!process_line(line, stamp)) return false;
    }
    return true;
  };

  httplib::Response res;
  httplib::Error err = httplib::Error::Success;
  const bool sent = cli.send(req, res, err);

  if (out.failure == StreamFailure::protocol) return out;
  if (!sent) {
    if (err == httplib::Error::Connection || err == httplib::Error::ConnectionTimeout) {
      out.failure = err == httplib::Error::ConnectionTimeout ? StreamFailure::timeout
                                                             : StreamFailure::connect;
      out.error = fmt::format("cannot connect to {}: {}", endpoint_.base_url, httplib::to_string(err));
      return out;
    }
    const auto silence = std::chrono::nanoseconds(monotonic_now_ns() - last_chunk_ns);
    if (err == httplib::Error::Read && silence >= timeouts_.inter_chunk) {
      out.failure = StreamFailure::timeout;
      out.error = fmt::format("no chunk within {} ms", timeouts_.inter_chunk.count());
    } else {
      out.failure = any_bytes || out.http_status != 0 ? StreamFailure::transport
                                                      : StreamFailure::connect;
      out.error = fmt::format("stream interrupted: {}", httplib::to_string(err));
    }
    return out;
  }
  if (out.http_status < 200 || out.http_status >= 300) {
    out.failure = StreamFailure::http_status;
    if (out.error_body.empty()) out.error_body = res.body;
    out.error = fmt::format("HTTP {}: {}", out.http_status, out.error_body);
    return out;
  }
  if (splitter.has_remainder()) {
    if (!process_line(splitter.take_remainder(), monotonic_now_ns())) return out;
  }
  out.transport_ok = true;
  if (!out.saw_final) {
    out.failure = StreamFailure::transport;
    out.error = "stream ended without a final chunk";
  }
  return out;
}

bool OllamaClient::health_check() {
  try {
    auto cli = make_http_client(url_, timeouts_.health, timeouts_.health);
    auto res = cli.Get(url_.path_prefix + "/api/version");
    if (!res || res->status != 200) return false;
    json j = json::parse(res->body, nullptr, false);
    return j.is_object() && j.contains("version");
  } catch (...) {
    return false;
  }
}

StreamCompletion StackFlowStubClient::chat_stream(const InferenceRequest&, const TokenSink&) {
  StreamCompletion out;
  out.failure = StreamFailure::unsupported;
  out.error = "stackflow runtime protocol is not implemented";
  return out;
}

std::unique_ptr<StreamingClient> make_client(const RuntimeEndpoint& endpoint,
                                             const Timeouts& timeouts) {
  if (endpoint.kind == RuntimeKind::stackflow_stub) {
    return std::make_unique<StackFlowStubClient>(endpoint);
  }
  return std::make_unique<OllamaClient>(endpoint, timeouts);
}

}  // namespace edgebench
