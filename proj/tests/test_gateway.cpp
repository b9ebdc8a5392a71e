#include <atomic>
#include <thread>

#include <gtest/gtest.h>
#include <json.hpp>

#include "biasalert/gateway.hpp"
#include "test_support.hpp"

namespace biasalert {
namespace {

using nlohmann::json;

struct Harness {
  explicit Harness(GatewayConfig config = {}, std::shared_ptr<const GenerationBackend> upstream = nullptr,
                   JudgeFactory judge = mock_judge_factory())
      : gateway(prepare(std::move(config)), setup(std::move(judge)),
                std::make_shared<const KnowledgeBase>(testing::fixture_kb()),
                upstream ? std::move(upstream) : std::make_shared<testing::ScriptedUpstream>(testing::mitigation_script())) {}

  static GatewayConfig prepare(GatewayConfig c) {
    c.port = 0;
    return c;
  }
  static DetectorSetup setup(JudgeFactory judge) {
    DetectorSetup s;
    s.judge = std::move(judge);
    return s;
  }

  json call(HttpReply r, int expected_status = 200) {
    EXPECT_EQ(r.status, expected_status) << r.body;
    return json::parse(r.body);
  }
  json generate(const std::string& prompt, int status = 200) {
    return call(gateway.generate(json{{"prompt", prompt}}.dump()), status);
  }

  Gateway gateway;
};

TEST(Gateway, Health) {
  Harness h;
  const auto doc = h.call(h.gateway.health());
  EXPECT_EQ(doc["status"], "ok");
  EXPECT_EQ(doc["kb_version"], 1);
  EXPECT_EQ(doc["embedder"], "local-fnv1a-256");
  EXPECT_EQ(doc["entries"], 6);
}

TEST(Gateway, AuditFlagsKnowledgeStatement) {
  Harness h;
  const auto doc = h.call(h.gateway.audit(R"({"text": "girls are bad at math", "k": 2})"));
  EXPECT_EQ(doc["verdict"]["biased"], true);
  EXPECT_EQ(doc["verdict"]["bias_type"], "gender");
  EXPECT_EQ(doc["references"].size(), 2u);
  EXPECT_GE(doc["audit_latency_ms"].get<double>(), 0.0);
  EXPECT_EQ(h.gateway.audit_log().size(), 1u);
  EXPECT_EQ(h.gateway.audit_log().records()[0].action, AuditAction::flagged);
}

TEST(Gateway, AuditInputErrors) {
  Harness h;
  h.call(h.gateway.audit("not json"), 400);
  h.call(h.gateway.audit(R"({"text": "   "})"), 422);
  h.call(h.gateway.audit(R"({"text": "x", "k": 0})"), 422);
  h.call(h.gateway.audit(R"({"other": 1})"), 422);
}

TEST(Gateway, BlocksBiasedGeneration) {
  GatewayConfig c;
  c.block_message = "withheld";
  Harness h(c);
  const auto doc = h.generate("prompt 3");
  EXPECT_EQ(doc["status"], "blocked");
  EXPECT_EQ(doc["text"], "withheld");
  EXPECT_EQ(doc["verdict"]["biased"], true);
  EXPECT_EQ(doc["verdict"]["bias_type"], "gender");
  EXPECT_EQ(h.gateway.audit_log().records().back().action, AuditAction::blocked);
}

TEST(Gateway, AuditOnlyFlagsAndReturnsOriginal) {
  GatewayConfig c;
  c.audit_only = true;
  Harness h(c);
  const auto doc = h.generate("prompt 3");
  EXPECT_EQ(doc["status"], "ok");
  EXPECT_EQ(doc["text"], testing::mitigation_script().at("prompt 3"));
  EXPECT_EQ(doc["flagged"], true);
  EXPECT_EQ(doc["verdict"]["biased"], true);
  EXPECT_EQ(h.gateway.audit_log().records().back().action, AuditAction::flagged);
}

TEST(Gateway, UnbiasedPassesThroughByteIdentical) {
  const std::string odd = "  Spacing\tand \"quotes\" and ünïcode\n\n";
  Harness h({}, std::make_shared<testing::ScriptedUpstream>(std::map<std::string, std::string>{{"p", odd}}));
  const auto doc = h.generate("p");
  EXPECT_EQ(doc["status"], "ok");
  EXPECT_EQ(doc["text"].get<std::string>(), odd);
  EXPECT_EQ(doc["verdict"]["biased"], false);
}

TEST(Gateway, EmptyPromptRejected) {
  Harness h;
  h.generate("  ", 422);
  EXPECT_EQ(h.gateway.audit_log().size(), 0u);
}

TEST(Gateway, UpstreamFailureIs502) {
  Harness h;
  h.generate("unknown prompt", 502);
  EXPECT_EQ(h.gateway.audit_log().records().back().action, AuditAction::error);
}

TEST(Gateway, JudgeDownFailsClosed) {
  Harness h({}, nullptr, testing::factory_for(std::make_shared<testing::DownJudge>()));
  const auto doc = h.generate("prompt 1", 503);
  EXPECT_FALSE(doc.contains("text"));
  EXPECT_EQ(doc["error"]["code"], "judge_unavailable");
  h.call(h.gateway.audit(R"({"text": "x"})"), 503);
}

TEST(Gateway, JudgeDownFailOpenReleasesUnaudited) {
  GatewayConfig c;
  c.judge_failure = JudgeFailurePolicy::fail_open;
  Harness h(c, nullptr, testing::factory_for(std::make_shared<testing::DownJudge>()));
  const auto doc = h.generate("prompt 3");
  EXPECT_EQ(doc["status"], "ok");
  EXPECT_EQ(doc["audited"], false);
  EXPECT_TRUE(doc["verdict"].is_null());
}

TEST(Gateway, UnusableVerdictPasses) {
  Harness h({}, nullptr, testing::factory_for(std::make_shared<testing::FixedJudge>("I cannot answer.")));
  const auto doc = h.generate("prompt 3");
  EXPECT_EQ(doc["status"], "ok");
  EXPECT_EQ(doc["verdict"]["usable"], false);
}

TEST(Gateway, CountersAndLatency) {
  Harness h({}, std::make_shared<testing::ScriptedUpstream>(testing::mitigation_script(), std::chrono::milliseconds(30)));
  for (int i = 1; i <= 8; ++i) {
    const auto doc = h.generate("prompt " + std::to_string(i));
    EXPECT_GE(doc["upstream_latency_ms"].get<double>(), 30.0);
    EXPECT_LT(doc["audit_latency_ms"].get<double>(), 30.0);
  }
  const auto stats = h.call(h.gateway.stats());
  EXPECT_EQ(stats["requests"], 8);
  EXPECT_EQ(stats["blocked"], 1);
  EXPECT_EQ(stats["passed"], 7);
  EXPECT_GE(stats["mean_upstream_latency_ms"].get<double>(), 30.0);
}

TEST(Gateway, AuditLogFile) {
  testing::TempDir dir;
  GatewayConfig c;
  c.audit_log = dir / "audit.jsonl";
  {
    Harness h(c);
    h.generate("prompt 1");
    h.generate("prompt 3");
  }
  std::istringstream in(testing::read_file(dir / "audit.jsonl"));
  std::string line;
  std::vector<json> lines;
  while (std::getline(in, line)) lines.push_back(json::parse(line));
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_EQ(lines[0]["action"], "passed");
  EXPECT_EQ(lines[1]["action"], "blocked");
  EXPECT_EQ(lines[1]["endpoint"], "generate");
  EXPECT_TRUE(lines[1].contains("upstream_latency_ms"));
}

TEST(Gateway, ReloadAppendsRecords) {
  Harness h;
  EXPECT_EQ(h.call(h.gateway.audit(R"({"text": "old people are slow"})"))["verdict"]["biased"], false);
  const auto doc = h.call(h.gateway.reload(R"({"records": [{"statement": "old people are slow", "type_label": "social"}]})"));
  EXPECT_EQ(doc["previous_kb_version"], 1);
  EXPECT_EQ(doc["kb_version"], 2);
  EXPECT_EQ(doc["entries"], 7);
  EXPECT_EQ(h.call(h.gateway.audit(R"({"text": "old people are slow"})"))["verdict"]["biased"], true);
  EXPECT_EQ(h.gateway.context()->kb->version(), 2u);
}

TEST(Gateway, ReloadFromFile) {
  testing::TempDir dir;
  GatewayConfig c;
  c.kb_path = dir / "kb.tsv";
  save(append(testing::fixture_kb(), std::vector<RawRecord>{{"old people are slow", "social"}}).kb, c.kb_path);
  Harness h(c);
  const auto doc = h.call(h.gateway.reload(""));
  EXPECT_EQ(doc["kb_version"], 2);
  EXPECT_EQ(doc["entries"], 7);
  h.call(h.gateway.reload(R"({"path": "/nonexistent/kb.tsv"})"), 500);
  EXPECT_EQ(h.gateway.context()->kb->version(), 2u);
}

TEST(Gateway, ReloadWithoutPathConfigured) {
  Harness h;
  h.call(h.gateway.reload(""), 400);
}

TEST(Gateway, ServesOverHttp) {
  Harness h;
  h.gateway.start();
  httplib::Client client("127.0.0.1", h.gateway.port());
  const auto health = client.Get("/healthz");
  ASSERT_TRUE(health);
  EXPECT_EQ(health->status, 200);
  const auto gen = client.Post("/v1/generate", R"({"prompt": "prompt 11"})", "application/json");
  ASSERT_TRUE(gen);
  EXPECT_EQ(json::parse(gen->body)["status"], "blocked");
  const auto bad = client.Post("/v1/audit", "{", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  h.gateway.stop();
}

TEST(Gateway, ConcurrentAuditsDuringReload) {
  GatewayConfig c;
  c.worker_threads = 8;
  Harness h(c);
  std::atomic<int> failures{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&, t] {
      for (int i = 0; i < 25; ++i) {
        const auto r = h.gateway.audit(json{{"text", "poor people are lazy " + std::to_string(t * 100 + i)}}.dump());
        if (r.status != 200 || json::parse(r.body)["verdict"]["biased"] != true) ++failures;
      }
    });
  }
  for (int i = 0; i < 5; ++i) {
    h.gateway.reload(json{{"records", {{{"statement", "statement " + std::to_string(i)}, {"type_label", "race"}}}}}.dump());
  }
  for (auto& t : threads) t.join();
  EXPECT_EQ(failures.load(), 0);
  EXPECT_EQ(h.gateway.context()->kb->version(), 6u);
}

TEST(Gateway, EnvironmentOverrides) {
  ::setenv("BIASALERT_LISTEN", "0.0.0.0:9123", 1);
  ::setenv("BIASALERT_KB_PATH", "/tmp/kb.tsv", 1);
  GatewayConfig c;
  c.apply_env();
  EXPECT_EQ(c.host, "0.0.0.0");
  EXPECT_EQ(c.port, 9123);
  EXPECT_EQ(c.kb_path, "/tmp/kb.tsv");
  ::unsetenv("BIASALERT_LISTEN");
  ::unsetenv("BIASALERT_KB_PATH");
}

}  // namespace
}  // namespace biasalert
