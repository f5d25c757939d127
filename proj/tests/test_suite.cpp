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

#include "edgebench/suite.hpp"
#include "support.hpp"

using namespace edgebench;

TEST_CASE("suite: shipped mock suite parses") {
  const auto s = load_suite(testing::fixture_path("suite_mock.toml"));
  CHECK(s.catalog_path == testing::fixture_path("catalog.toml"));
  CHECK(s.benchmark.runs == 3);
  CHECK(s.benchmark.max_new_tokens == 40);
  CHECK(s.benchmark.cooldown == std::chrono::milliseconds(500));
  CHECK(std::get<double>(s.benchmark.decode_params.at("temperature")) == 0.0);
  CHECK(std::get<std::int64_t>(s.benchmark.decode_params.at("seed")) == 42);
  REQUIRE(s.targets.size() == 1);
  const auto& t = s.targets[0];
  CHECK(t.config_id == "mock-rpi5");
  CHECK(t.endpoint.kind == RuntimeKind::mock);
  CHECK(t.endpoint.chat_path == "/api/chat");
  CHECK(t.model_ids == std::vector<std::string>{"qwen2.5-0.5b", "llama3.2-1b"});
  CHECK(*t.constant_power_w == 10.6);
  CHECK(s.hash.size() == 16);
}

TEST_CASE("suite: defaults follow the published protocol") {
  const auto s = parse_suite(R"(
models = ["deepseek-r1-1.5b"]
[[endpoint]]
id = "hat"
device = "rpi5-hat"
kind = "hailo_ollama"
)", "inline.toml");
  CHECK(s.benchmark.runs == 5);
  CHECK(s.benchmark.max_new_tokens == 100);
  CHECK(s.benchmark.warmup_runs == 1);
  CHECK(s.benchmark.prompt == "Explain why the sky is blue in two or more paragraphs.");
  CHECK(s.targets[0].endpoint.base_url == "http://127.0.0.1:8000");
  CHECK(s.catalog_path.empty());
}

TEST_CASE("suite: invalid files are rejected before anything runs") {
  const char* endpoint = "\n[[endpoint]]\nid = \"a\"\ndevice = \"rpi5\"\nkind = \"mock\"\n";
  CHECK_THROWS_AS(parse_suite("models = [\"m\"]\n", "s"), ConfigError);
  CHECK_THROWS_AS(parse_suite(std::string("models = [\"m\"]\n[benchmark]\nruns = 0\n") + endpoint, "s"),
                  ValidationError);
  CHECK_THROWS_AS(parse_suite(std::string("models = [\"m\"]\n[benchmark]\nbogus = 1\n") + endpoint, "s"),
                  ValidationError);
  CHECK_THROWS_AS(parse_suite(std::string("models = [\"m\"]\n") + endpoint + endpoint, "s"),
                  ValidationError);
  CHECK_THROWS_AS(parse_suite(endpoint, "s"), ValidationError);
  CHECK_THROWS_AS(parse_suite(std::string("models = [\"m\"]\n") + endpoint + "base_url = \"https://x\"\n", "s"),
                  ConfigError);
  CHECK_THROWS_AS(parse_suite(std::string("models = [\"m\"]\n") + endpoint + "kind2 = 1\n", "s"),
                  ValidationError);
}
