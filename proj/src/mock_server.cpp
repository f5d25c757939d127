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

#include "edgebench/mock_server.hpp"

#include <fmt/format.h>
#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <random>
#include <set>
#include <thread>

#include "edgebench/adapters.hpp"

namespace edgebench {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

void MockProfile::validate() const {
  const std::string ctx = "profile[" + model_id + "]";
  if (model_id.empty()) throw ValidationError("profile.model_id", "must not be empty");
  if (!(tokens_per_s > 0.0)) throw ValidationError(ctx + ".tokens_per_s", "must be positive");
  if (!(ttft_ms >= 0.0)) throw ValidationError(ctx + ".ttft_ms", "must be nonnegative");
  if (!(first_request_load_ms >= 0.0)) {
    throw ValidationError(ctx + ".first_request_load_ms", "must be nonnegative");
  }
  if (!(jitter_pct >= 0.0 && jitter_pct < 100.0)) {
    throw ValidationError(ctx + ".jitter_pct", "must be in [0, 100)");
  }
  if (fail_after_tokens && *fail_after_tokens < 0) {
    throw ValidationError(ctx + ".fail_after_tokens", "must be nonnegative");
  }
  if (max_tokens && *max_tokens < 1) throw ValidationError(ctx + ".max_tokens", "must be >= 1");
}

std::vector<MockProfile> mock_profiles_from_table(const kv::Table& root, const std::string& source) {
  std::vector<MockProfile> out;
  kv::FieldReader top(root, "", source);
  if (const kv::Array* arr = top.optional_array("profile")) {
    for (std::size_t i = 0; i < arr->size(); ++i) {
      if (!(*arr)[i].is_table()) throw ValidationError("profile", "expected [[profile]] tables");
      kv::FieldReader r((*arr)[i].as_table(), fmt::format("profile[{}]", i), source);
      MockProfile p;
      p.model_id = r.require_string("model_id");
      p.ttft_ms = r.optional_number("ttft_ms").value_or(0.0);
      p.tokens_per_s = r.require_number("tokens_per_s");
      p.first_request_load_ms = r.optional_number("first_request_load_ms").value_or(0.0);
      p.jitter_pct = r.optional_number("jitter_pct").value_or(0.0);
      p.seed = static_cast<std::uint64_t>(r.optional_integer("seed").value_or(0));
      if (auto f = r.optional_integer("fail_after_tokens")) p.fail_after_tokens = static_cast<int>(*f);
      if (auto m = r.optional_integer("max_tokens")) p.max_tokens = static_cast<int>(*m);
      r.reject_unknown();
      p.validate();
      out.push_back(std::move(p));
    }
  }
  top.reject_unknown();
  std::set<std::string> ids;
  for (const auto& p : out) {
    if (!ids.insert(p.model_id).second) {
      throw ValidationError("profile[" + p.model_id + "].model_id", "duplicate model id");
    }
  }
  return out;
}

std::vector<MockProfile> load_mock_profiles(const std::string& path) {
  return mock_profiles_from_table(kv::parse_file(path), path);
}

std::string mock_token_text(std::size_t k) { return fmt::format("tok{}", k); }

std::pair<std::string, int> parse_bind_address(std::string_view bind) {
  const auto colon = bind.rfind(':');
  if (colon == std::string_view::npos) {
    throw ConfigError(fmt::format("bind address '{}' is not host:port", bind));
  }
  std::string host(bind.substr(0, colon));
  std::string port_text(bind.substr(colon + 1));
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(port_text, &used);
    if (used != port_text.size()) port = -1;
  } catch (const std::logic_error&) {
  }
  if (host.empty() || port < 0 || port > 65535) {
    throw ConfigError(fmt::format("bind address '{}' is not host:port", bind));
  }
  return {host, port};
}

namespace {

std::string iso_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}Z", tm.tm_year + 1900, tm.tm_mon + 1,
                     tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
}

// Per-request emission state shared with the chunked content provider.
struct StreamState {
  std::string model;
  std::vector<Clock::time_point> deadlines;
  std::optional<int> fail_after;
  std::size_t next = 0;
  Clock::time_point started;
  std::chrono::nanoseconds load{0};
};

}  // namespace

struct MockServer::Impl {
  std::vector<MockProfile> profiles;
  httplib::Server server;
  std::thread thread;
  std::mutex load_mutex;
  std::set<std::string> loaded;
  std::atomic<bool> stopping{false};
  std::atomic<std::size_t> requests{0};
  std::string host = "127.0.0.1";
  int port = 0;

  const MockProfile* find(const std::string& model) const {
    for (const auto& p : profiles) {
      if (p.model_id == model) return &p;
    }
    return nullptr;
  }

  // Sleeps until `deadline`; false if the server is shutting down.
  bool wait_until(Clock::time_point deadline) const {
    while (true) {
      if (stopping.load()) return false;
      const auto now = Clock::now();
      if (now >= deadline) return true;
      std::this_thread::sleep_until(std::min(deadline, now + std::chrono::milliseconds(50)));
    }
  }

  void install_routes() {
    // No SO_REUSEPORT: a second server on a taken port must fail to bind.
    server.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
    });
    server.set_tcp_nodelay(true);
    server.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content("Ollama is running", "text/plain");
    });
    server.Get("/api/version", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"version":"0.0.0-mock"})", "application/json");
    });
    server.Get("/api/tags", [this](const httplib::Request&, httplib::Response& res) {
      json models = json::array();
      for (const auto& p : profiles) models.push_back({{"name", p.model_id}, {"model", p.model_id}});
      res.set_content(json{{"models", models}}.dump(), "application/json");
    });
    server.Post("/api/chat", [this](const httplib::Request& req, httplib::Response& res) {
      handle_chat(req, res);
    });
  }

  static void error(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", message}}.dump(), "application/json");
  }

  void handle_chat(const httplib::Request& req, httplib::Response& res) {
    const auto received = Clock::now();
    ++requests;
    json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object() || !body.contains("model") ||
        !body["model"].is_string()) {
      error(res, 400, "invalid request body");
      return;
    }
    const std::string model = body["model"].get<std::string>();
    const MockProfile* profile = find(model);
    if (profile == nullptr) {
      error(res, 404, fmt::format("model \"{}\" not found, try pulling it first", model));
      return;
    }
    if (body.contains("stream") && body["stream"].is_boolean() && !body["stream"].get<bool>()) {
      error(res, 400, "the mock only serves streaming requests");
      return;
    }
    std::int64_t requested = 128;
    if (auto opts = body.find("options"); opts != body.end() && opts->is_object()) {
      if (auto np = opts->find("num_predict"); np != opts->end() && np->is_number_integer()) {
        requested = np->get<std::int64_t>();
      }
    }
    if (requested < 1) requested = 1;
    std::size_t n = static_cast<std::size_t>(requested);
    if (profile->max_tokens) n = std::min(n, static_cast<std::size_t>(*profile->max_tokens));

    auto state = std::make_shared<StreamState>();
    state->model = model;
    state->fail_after = profile->fail_after_tokens;
    state->started = received;
    {
      std::lock_guard lock(load_mutex);
      if (loaded.insert(model).second) {
        state->load = std::chrono::nanoseconds(
            std::llround(profile->first_request_load_ms * 1e6));
      }
    }
    // Absolute deadlines: first token at load + ttft, then cumulative gaps.
    std::mt19937_64 rng(profile->seed);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const double gap_ns = 1e9 / profile->tokens_per_s;
    const double jitter = profile->jitter_pct / 100.0;
    double offset_ns = static_cast<double>(state->load.count()) + profile->ttft_ms * 1e6;
    state->deadlines.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      if (k > 0) {
        const double factor = jitter > 0.0 ? 1.0 + jitter * unit(rng) : 1.0;
        offset_ns += gap_ns * factor;
      }
      state->deadlines.push_back(
          received + std::chrono::nanoseconds(static_cast<std::int64_t>(std::llround(offset_ns))));
    }

    res.set_chunked_content_provider(
        "application/x-ndjson", [this, state](std::size_t, httplib::DataSink& sink) {
          if (state->next < state->deadlines.size()) {
            if (state->fail_after && state->next >= static_cast<std::size_t>(*state->fail_after)) {
              return false;
            }
            if (!wait_until(state->deadlines[state->next])) return false;
            json chunk = {
                {"model", state->model},
                {"created_at", iso_now()},
                {"message", {{"role", "assistant"}, {"content", mock_token_text(state->next)}}},
                {"done", false},
            };
            const std::string line = chunk.dump() + "\n";
            ++state->next;
            return sink.write(line.data(), line.size());
          }
          const auto now = Clock::now();
          const auto eval_ns =
              state->deadlines.empty()
                  ? std::chrono::nanoseconds(0)
                  : std::chrono::duration_cast<std::chrono::nanoseconds>(state->deadlines.back() -
                                                                         state->deadlines.front());
          json final_chunk = {
              {"model", state->model},
              {"created_at", iso_now()},
              {"message", {{"role", "assistant"}, {"content", ""}}},
              {"done", true},
              {"done_reason", "length"},
              {"total_duration",
               std::chrono::duration_cast<std::chrono::nanoseconds>(now - state->started).count()},
              {"load_duration", state->load.count()},
              {"prompt_eval_count", 1},
              {"eval_count", state->next},
              {"eval_duration", eval_ns.count()},
          };
          const std::string line = final_chunk.dump() + "\n";
          if (!sink.write(line.data(), line.size())) return false;
          sink.done();
          return true;
        });
  }
};

MockServer::MockServer(std::vector<MockProfile> profiles) : impl_(std::make_unique<Impl>()) {
  for (const auto& p : profiles) p.validate();
  impl_->profiles = std::move(profiles);
  impl_->install_routes();
}

MockServer::~MockServer() { stop(); }

int MockServer::start(const std::string& host, int port) {
  impl_->host = host;
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port(host);
  } else {
    impl_->port = impl_->server.bind_to_port(host, port) ? port : -1;
  }
  if (impl_->port <= 0) {
    throw TransportError(fmt::format("mock server cannot bind {}:{}", host, port));
  }
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void MockServer::listen_blocking(const std::string& host, int port) {
  impl_->host = host;
  if (!impl_->server.bind_to_port(host, port)) {
    throw TransportError(fmt::format("mock server cannot bind {}:{}", host, port));
  }
  impl_->port = port;
  impl_->server.listen_after_bind();
}

void MockServer::stop() {
  if (!impl_) return;
  impl_->stopping = true;
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int MockServer::port() const { return impl_->port; }

std::string MockServer::base_url() const {
  return fmt::format("http://{}:{}", impl_->host, impl_->port);
}

std::size_t MockServer::request_count() const { return impl_->requests.load(); }

}  // namespace edgebench
