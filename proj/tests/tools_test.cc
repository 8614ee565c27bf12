// Copyright 2026 The toolmix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "toolmix/tools.h"

#include <gtest/gtest.h>

#include <cstdlib>
#include <random>
#include <thread>

namespace toolmix {
namespace {

using namespace std::chrono_literals;

CodeSandbox LenientSandbox() {
  SandboxOptions options;
  options.network = NetworkPolicy::kBestEffort;
  return CodeSandbox(options);
}

TEST(Sandbox, PrintsArithmetic) {
  const auto r = LenientSandbox().Run("print(1+1)", 10s);
  EXPECT_EQ(r.status, ExecStatus::kOk);
  EXPECT_EQ(r.stdout_text, "2\n");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_FALSE(r.sandbox_failure);
}

TEST(Sandbox, RuntimeErrorNamesTheSymbol) {
  const auto r = LenientSandbox().Run("print(undefined_name)", 10s);
  EXPECT_EQ(r.status, ExecStatus::kRuntimeError);
  EXPECT_NE(r.stderr_text.find("undefined_name"), std::string::npos);
  EXPECT_NE(r.exit_code, 0);
  EXPECT_FALSE(r.sandbox_failure);
}

TEST(Sandbox, BusyLoopTimesOut) {
  const auto start = std::chrono::steady_clock::now();
  const auto r = LenientSandbox().Run("while True: pass", 1s);
  const auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_EQ(r.status, ExecStatus::kTimeout);
  EXPECT_GE(r.wall_time, 1s);
  EXPECT_LT(elapsed, 3s);
}

TEST(Sandbox, KillsGrandchildrenHoldingPipes) {
  // The child forks a sleeper that inherits stdout; the run must still end
  // at the limit rather than when the grandchild exits.
  const auto start = std::chrono::steady_clock::now();
  const auto r = LenientSandbox().Run(
      "import os, time\n"
      "if os.fork() == 0:\n"
      "    time.sleep(30)\n"
      "else:\n"
      "    time.sleep(30)\n",
      1s);
  EXPECT_EQ(r.status, ExecStatus::kTimeout);
  EXPECT_LT(std::chrono::steady_clock::now() - start, 4s);
}

TEST(Sandbox, HostEnvironmentIsInvisible) {
  ::setenv("TOOLMIX_TEST_CANARY", "canary-7f3a", 1);
  const auto r = LenientSandbox().Run(
      "import os\n"
      "print(os.environ.get('TOOLMIX_TEST_CANARY', 'absent'))\n"
      "print(any('canary-7f3a' in v for v in os.environ.values()))\n",
      10s);
  ::unsetenv("TOOLMIX_TEST_CANARY");
  EXPECT_EQ(r.status, ExecStatus::kOk);
  EXPECT_EQ(r.stdout_text, "absent\nFalse\n");
}

TEST(Sandbox, RunsInFreshScratchDirectory) {
  const CodeSandbox sandbox = LenientSandbox();
  const auto first = sandbox.Run(
      "import os\nopen('marker.txt','w').write('x')\nprint(os.getcwd())", 10s);
  const auto second =
      sandbox.Run("import os\nprint(os.path.exists('marker.txt'))", 10s);
  ASSERT_EQ(first.status, ExecStatus::kOk);
  EXPECT_EQ(second.stdout_text, "False\n");
  std::string dir = first.stdout_text;
  dir.pop_back();
  EXPECT_NE(dir, std::string(std::getenv("PWD") ? std::getenv("PWD") : ""));
}

TEST(Sandbox, OutputIsCapped) {
  SandboxOptions options;
  options.network = NetworkPolicy::kBestEffort;
  options.max_output_bytes = 1000;
  const auto r = CodeSandbox(options).Run("print('x' * 100000)", 10s);
  EXPECT_EQ(r.status, ExecStatus::kOk);
  EXPECT_EQ(r.stdout_text.size(), 1000u);
  EXPECT_TRUE(r.output_truncated);
}

TEST(Sandbox, NetworkDeniedByDefault) {
  const CodeSandbox sandbox;
  const auto r = sandbox.Run(
      "import socket\n"
      "s = socket.socket()\n"
      "s.settimeout(2)\n"
      "try:\n"
      "    s.connect(('1.1.1.1', 80))\n"
      "    print('connected')\n"
      "except OSError:\n"
      "    print('blocked')\n",
      10s);
  if (r.sandbox_failure) {
    GTEST_SKIP() << "no network namespace support: " << r.stderr_text;
  }
  EXPECT_EQ(r.stdout_text, "blocked\n");
}

TEST(Sandbox, MissingInterpreterIsSandboxFailure) {
  SandboxOptions options;
  options.interpreter = "/nonexistent/python";
  options.network = NetworkPolicy::kAllow;
  const auto r = CodeSandbox(options).Run("print(1)", 5s);
  EXPECT_EQ(r.status, ExecStatus::kRuntimeError);
  EXPECT_TRUE(r.sandbox_failure);
}

TEST(Sandbox, ConcurrentRunsAreIndependent) {
  LocalToolSuite suite(LenientSandbox(), SearchProviders(), 2);
  std::vector<ExecutionResult> results(6);
  std::vector<std::jthread> threads;
  for (int i = 0; i < 6; ++i) {
    threads.emplace_back([&, i] {
      results[i] = suite.ExecuteCode("print(" + std::to_string(i) + "*3)", 10s);
    });
  }
  threads.clear();
  for (int i = 0; i < 6; ++i) {
    EXPECT_EQ(results[i].stdout_text, std::to_string(i * 3) + "\n");
  }
}

TEST(Evidence, RenderParseRoundTrip) {
  std::mt19937 rng(5);
  const std::vector<std::string> words = {"Paris", "(x)", ") y", "[1]", "a:b",
                                          "é", "tab\there", "<information>"};
  for (int t = 0; t < 300; ++t) {
    Evidence e;
    const int n = static_cast<int>(rng() % 6);
    for (int i = 0; i < n; ++i) {
      std::string snippet;
      for (int k = 0; k < 3; ++k) snippet += words[rng() % words.size()] + " ";
      e.blocks.push_back(NormalizeBlock(rng() % 2 ? "gs" : "llm", snippet));
    }
    const std::string rendered = RenderEvidence(e);
    EXPECT_TRUE(rendered.starts_with("<information>"));
    EXPECT_TRUE(rendered.ends_with("</information>"));
    EXPECT_EQ(ParseEvidence(rendered), e.blocks) << rendered;
  }
}

TEST(Evidence, NormalizationStripsTagsAndWhitespace) {
  const auto block = NormalizeBlock("g s!", " a <information>b</information>\n c ");
  EXPECT_EQ(block.source, "gs");
  EXPECT_EQ(block.snippet, "a b c");
  EXPECT_THROW(ParseEvidence("no tags"), std::invalid_argument);
}

SearchProviders Scripted(
    std::map<std::string, ScriptedSearchProvider::Entry> gs,
    std::map<std::string, ScriptedSearchProvider::Entry> llm,
    SearchLimits limits = {}) {
  return SearchProviders(std::make_shared<ScriptedSearchProvider>("gs", gs),
                         std::make_shared<ScriptedSearchProvider>("llm", llm),
                         limits);
}

TEST(Search, CombinedIsGoogleFirstAndDeduplicated) {
  const auto providers =
      Scripted({{"x", {{{"gs", "G"}, {"gs", "shared"}}, ""}}},
               {{"x", {{{"llm", "L"}, {"llm", " shared "}}, ""}}});
  const Evidence e = providers.Search("x", SearchVariant::kCombined);
  ASSERT_EQ(e.blocks.size(), 3u);
  EXPECT_EQ(e.blocks[0], (EvidenceBlock{"gs", "G"}));
  EXPECT_EQ(e.blocks[1], (EvidenceBlock{"gs", "shared"}));
  EXPECT_EQ(e.blocks[2], (EvidenceBlock{"llm", "L"}));
  EXPECT_EQ(e.variant_used, SearchVariant::kCombined);
}

TEST(Search, TransportFailureBecomesErrorBlock) {
  const auto providers = Scripted({{"x", {{}, "HTTP 503"}}}, {});
  const Evidence e = providers.Search("x", SearchVariant::kGoogle);
  ASSERT_EQ(e.blocks.size(), 1u);
  EXPECT_EQ(e.blocks[0].source, "error");
  EXPECT_NE(e.blocks[0].snippet.find("HTTP 503"), std::string::npos);
}

TEST(Search, LimitsApply) {
  std::vector<EvidenceBlock> many;
  for (int i = 0; i < 20; ++i) many.push_back({"gs", std::string(50, 'a' + i)});
  const auto providers = Scripted({{"x", {many, ""}}}, {}, {8, 10});
  const Evidence e = providers.Search("x", SearchVariant::kGoogle);
  ASSERT_EQ(e.blocks.size(), 8u);
  for (const auto& b : e.blocks) EXPECT_EQ(b.snippet.size(), 10u);
}

TEST(Search, UnconfiguredVariantIsConfigError) {
  SearchProviders providers(
      std::make_shared<ScriptedSearchProvider>(
          "gs", std::map<std::string, ScriptedSearchProvider::Entry>{}),
      nullptr);
  EXPECT_NO_THROW(providers.Require(SearchVariant::kGoogle));
  EXPECT_THROW(providers.Require(SearchVariant::kLlm), ConfigError);
  EXPECT_THROW(providers.Require(SearchVariant::kCombined), ConfigError);
  EXPECT_THROW(providers.Search("", SearchVariant::kGoogle),
               std::invalid_argument);
}

TEST(ScriptedSuite, FixtureFile) {
  auto suite = ScriptedToolSuite::FromFile(std::string(TOOLMIX_DATA_DIR) +
                                           "/tools_script.json");
  const Evidence e = suite->Search("capital of France", SearchVariant::kGoogle);
  ASSERT_EQ(e.blocks.size(), 1u);
  EXPECT_NE(e.blocks[0].snippet.find("Paris"), std::string::npos);
}

TEST(ScriptedSuite, LookupMissAndPurity) {
  auto suite = ScriptedToolSuite::FromJson(R"json({
    "code": [{"source": "print(3+4)", "stdout": "7\n"},
             {"source": "while True: pass", "status": "timeout"}],
    "search": {"gs": {"q": ["a"]}}
  })json");
  const auto first = suite->ExecuteCode("print(3+4)\n", 5s);
  const auto second = suite->ExecuteCode("print(3+4)", 5s);
  EXPECT_EQ(first.stdout_text, "7\n");
  EXPECT_EQ(first.stdout_text, second.stdout_text);
  EXPECT_EQ(first.status, second.status);
  EXPECT_EQ(suite->ExecuteCode("while True: pass", 2s).wall_time, 2s);
  try {
    suite->Search("unknown query", SearchVariant::kGoogle);
    FAIL() << "expected a fixture miss";
  } catch (const FixtureMissError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown query"), std::string::npos);
  }
  EXPECT_THROW(suite->ExecuteCode("print(0)", 5s), FixtureMissError);
  EXPECT_THROW(suite->RequireVariant(SearchVariant::kLlm), ConfigError);
  EXPECT_THROW(ScriptedToolSuite::FromJson("{"), ConfigError);
}

}  // namespace
}  // namespace toolmix
