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

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <thread>

#include "edgebench/adapters.hpp"
#include "edgebench/mock_server.hpp"
#include "support.hpp"

using namespace edgebench;

namespace {

InferenceRequest request_for(const std::string& model, int tokens) {
  InferenceRequest r;
  r.model_id = model;
  r.prompt = "hi";
  r.max_new_tokens = tokens;
  return r;
}

RuntimeEndpoint mock_endpoint(int port) {
  RuntimeEndpoint e = RuntimeEndpoint::with_defaults(RuntimeKind::mock);
  e.base_url = "http://127.0.0.1:" + std::to_string(port);
  return e;
}

/// Serves a fixed NDJSON body on /api/chat for protocol-violation tests.
class CannedServer {
 public:
  explicit CannedServer(std::string body) : body_(std::move(body)) {
    server_.Post("/api/chat", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(body_, "application/x-ndjson");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~CannedServer() {
    server_.stop();
    thread_.join();
  }
  int port() const { return port_; }

 private:
  std::string body_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace

TEST_CASE("adapters: base URL parsing") {
  auto u = parse_base_url("http://10.0.0.5:8000/prefix/");
  CHECK(u.host == "10.0.0.5");
  CHECK(u.port == 8000);
  CHECK(u.path_prefix == "/prefix");
  CHECK(parse_base_url("http://host").port == 80);
  CHECK_THROWS_AS(parse_base_url("https://host"), ConfigError);
  CHECK_THROWS_AS(parse_base_url("host:80"), ConfigError);
  CHECK_THROWS_AS(parse_base_url("http://host:x1"), ConfigError);
}

TEST_CASE("adapters: per-runtime defaults") {
  CHECK(default_port(RuntimeKind::ollama_native) == 11434);
  CHECK(default_port(RuntimeKind::hailo_ollama) == 8000);
  CHECK(default_chat_path(RuntimeKind::ollama_native) == "/api/chat");
  CHECK(RuntimeEndpoint::with_defaults(RuntimeKind::hailo_ollama).base_url == "http://127.0.0.1:8000");
}

TEST_CASE("adapters: chat request body") {
  InferenceRequest r = request_for("qwen2.5:0.5b", 100);
  r.decode_params["temperature"] = 0.0;
  r.decode_params["seed"] = std::int64_t{42};
  const auto j = nlohmann::json::parse(chat_request_body(r));
  CHECK(j["model"] == "qwen2.5:0.5b");
  CHECK(j["stream"] == true);
  CHECK(j["messages"][0]["role"] == "user");
  CHECK(j["messages"][0]["content"] == "hi");
  CHECK(j["options"]["num_predict"] == 100);
  CHECK(j["options"]["temperature"] == 0.0);
  CHECK(j["options"]["seed"] == 42);
  r.max_new_tokens = 0;
  CHECK_THROWS_AS(r.validate(), ValidationError);
}

TEST_CASE("adapters: chunk decoding") {
  auto c = decode_chat_chunk(R"({"message":{"role":"assistant","content":"tok0"},"done":false})");
  CHECK(c.content == "tok0");
  CHECK_FALSE(c.done);
  c = decode_chat_chunk(R"({"message":{"content":""},"done":true,"eval_count":7,"eval_duration":99})");
  CHECK(c.done);
  CHECK(c.counters->eval_count == 7);
  CHECK(c.counters->eval_duration_ns == 99);
  CHECK(decode_chat_chunk(R"({"error":"boom"})").error == "boom");
  CHECK_THROWS_AS(decode_chat_chunk("{oops"), ParseError);
  CHECK_THROWS_AS(decode_chat_chunk(R"({"other":1})"), ParseError);
  CHECK_THROWS_AS(decode_chat_chunk(R"({"done":"yes"})"), ParseError);
}

TEST_CASE("adapters: line splitter reassembles arbitrary chunking (property)") {
  testing::Gen g(12);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::string> lines;
    std::string stream;
    for (int k = 0; k < g.integer(0, 20); ++k) {
      lines.push_back("{\"n\":" + std::to_string(k) + "}");
      stream += lines.back() + (g.coin(0.2) ? "\r\n" : "\n");
      if (g.coin(0.1)) stream += "\n";
    }
    LineSplitter s;
    std::vector<std::string> got;
    std::size_t pos = 0;
    while (pos < stream.size()) {
      const auto n = static_cast<std::size_t>(g.integer(1, 17));
      for (auto& l : s.feed(std::string_view(stream).substr(pos, n))) got.push_back(l);
      pos += n;
    }
    CHECK_FALSE(s.has_remainder());
    CHECK(got == lines);
  }
}

TEST_CASE("adapters: streaming against the mock") {
  MockServer server({MockProfile{"m", 50.0, 200.0}});
  const int port = server.start();
  OllamaClient client(mock_endpoint(port));
  CHECK(client.health_check());

  std::vector<TokenEvent> events;
  const auto done = client.chat_stream(request_for("m", 10), [&](const TokenEvent& e) { events.push_back(e); });
  CHECK(done.ok());
  REQUIRE(events.size() == 11);
  for (int k = 0; k < 10; ++k) {
    CHECK(events[k].text_fragment == mock_token_text(k));
    CHECK_FALSE(events[k].is_final);
    if (k > 0) CHECK(events[k].recv_monotonic_ns >= events[k - 1].recv_monotonic_ns);
  }
  CHECK(events.back().is_final);
  CHECK(events.back().server_reported->eval_count == 10);
}

TEST_CASE("adapters: unknown model is a 404 with an error body") {
  MockServer server({MockProfile{"m", 0.0, 100.0}});
  OllamaClient client(mock_endpoint(server.start()));
  int events = 0;
  const auto done = client.chat_stream(request_for("nope", 5), [&](const TokenEvent&) { ++events; });
  CHECK(events == 0);
  CHECK(done.model_not_found());
  CHECK(done.error_body.find("not found") != std::string::npos);
}

TEST_CASE("adapters: dropped connection mid-stream") {
  MockProfile p{"m", 0.0, 100.0};
  p.fail_after_tokens = 3;
  MockServer server({p});
  OllamaClient client(mock_endpoint(server.start()));
  int events = 0;
  const auto done = client.chat_stream(request_for("m", 10), [&](const TokenEvent&) { ++events; });
  CHECK(events == 3);
  CHECK_FALSE(done.ok());
  CHECK(done.failure == StreamFailure::transport);
}

TEST_CASE("adapters: unreachable endpoint") {
  Timeouts t;
  t.connect = std::chrono::milliseconds(500);
  t.health = std::chrono::milliseconds(500);
  // Port 9 (discard) is closed on the loopback interface.
  OllamaClient client(mock_endpoint(9), t);
  CHECK_FALSE(client.health_check());
  const auto done = client.chat_stream(request_for("m", 5), [](const TokenEvent&) {});
  CHECK(done.failure == StreamFailure::connect);
}

TEST_CASE("adapters: inter-chunk timeout") {
  MockServer server({MockProfile{"m", 1500.0, 100.0}});
  Timeouts t;
  t.inter_chunk = std::chrono::milliseconds(300);
  OllamaClient client(mock_endpoint(server.start()), t);
  const auto done = client.chat_stream(request_for("m", 5), [](const TokenEvent&) {});
  CHECK(done.failure == StreamFailure::timeout);
}

TEST_CASE("adapters: protocol violations") {
  SUBCASE("malformed chunk") {
    CannedServer s("{\"message\":{\"content\":\"a\"},\"done\":false}\n{garbage\n");
    OllamaClient client(mock_endpoint(s.port()));
    int events = 0;
    const auto done = client.chat_stream(request_for("m", 5), [&](const TokenEvent&) { ++events; });
    CHECK(events == 1);
    CHECK(done.failure == StreamFailure::protocol);
  }
  SUBCASE("chunk after the final chunk") {
    CannedServer s(
        "{\"message\":{\"content\":\"a\"},\"done\":true,\"eval_count\":1}\n"
        "{\"message\":{\"content\":\"b\"},\"done\":false}\n");
    OllamaClient client(mock_endpoint(s.port()));
    const auto done = client.chat_stream(request_for("m", 5), [](const TokenEvent&) {});
    CHECK(done.failure == StreamFailure::protocol);
  }
  SUBCASE("stream without a final chunk") {
    CannedServer s("{\"message\":{\"content\":\"a\"},\"done\":false}\n");
    OllamaClient client(mock_endpoint(s.port()));
    const auto done = client.chat_stream(request_for("m", 5), [](const TokenEvent&) {});
    CHECK_FALSE(done.ok());
    CHECK(done.failure == StreamFailure::transport);
  }
  SUBCASE("final line without a newline") {
    CannedServer s("{\"message\":{\"content\":\"a\"},\"done\":false}\n{\"done\":true,\"eval_count\":1}");
    OllamaClient client(mock_endpoint(s.port()));
    const auto done = client.chat_stream(request_for("m", 5), [](const TokenEvent&) {});
    CHECK(done.ok());
  }
}

TEST_CASE("adapters: StackFlow slot reports unsupported") {
  auto client = make_client(RuntimeEndpoint::with_defaults(RuntimeKind::stackflow_stub));
  const auto done = client->chat_stream(request_for("m", 5), [](const TokenEvent&) {});
  CHECK(done.failure == StreamFailure::unsupported);
  CHECK_FALSE(client->health_check());
}
