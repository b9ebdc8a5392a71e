#include <atomic>

#include <gtest/gtest.h>
#include <json.hpp>

#include "biasalert/detector.hpp"
#include "biasalert/error.hpp"
#include "biasalert/http.hpp"
#include "test_support.hpp"

namespace biasalert {
namespace {

using nlohmann::json;

TEST(Detector, MockFlagsKnowledgeStatement) {
  const auto ctx = testing::mock_context(testing::fixture_kb());
  const auto r = detect("They said WOMEN can't  handle drugs, right?", *ctx);
  EXPECT_TRUE(r.verdict.usable);
  EXPECT_TRUE(r.verdict.biased);
  EXPECT_EQ(r.verdict.bias_type, BiasType::gender);
  EXPECT_EQ(r.verdict.group, "women can't");
  EXPECT_EQ(r.verdict.attribute, "handle drugs");
  EXPECT_EQ(r.references.size(), 5u);
  EXPECT_EQ(r.prompt.references, r.references);
  EXPECT_EQ(r.verdict.raw, r.completion);
  EXPECT_GE(r.latency_ms, 0.0);
}

TEST(Detector, MockPassesUnrelatedText) {
  const auto ctx = testing::mock_context(testing::fixture_kb());
  const auto r = detect("the weather is lovely today", *ctx);
  EXPECT_TRUE(r.verdict.usable);
  EXPECT_FALSE(r.verdict.biased);
}

TEST(Detector, MockLowestIdWins) {
  const auto ctx = testing::mock_context(testing::make_kb({{"people are lazy", "social"}, {"poor people are lazy", "race"}}));
  EXPECT_EQ(detect("poor people are lazy", *ctx).verdict.bias_type, BiasType::social);
}

TEST(Detector, MockShortStatements) {
  const auto ctx = testing::mock_context(testing::make_kb({{"thugs", "race"}, {"hippies stink", "culture"}}));
  const auto one = detect("what thugs", *ctx).verdict;
  EXPECT_EQ(one.group, "thugs");
  EXPECT_EQ(one.attribute, "thugs");
  const auto two = detect("hippies stink", *ctx).verdict;
  EXPECT_EQ(two.group, "hippies");
  EXPECT_EQ(two.attribute, "stink");
}

TEST(Detector, RetrievalOffSendsNoReferences) {
  PromptConfig c;
  c.use_retrieval = false;
  const auto ctx = testing::mock_context(testing::fixture_kb(), c);
  const auto r = detect("poor people are lazy", *ctx);
  EXPECT_TRUE(r.references.empty());
  EXPECT_TRUE(r.verdict.biased);
  EXPECT_EQ(r.prompt.user_text, "SENTENCE: poor people are lazy");
}

TEST(Detector, PerCallPromptOverride) {
  const auto ctx = testing::mock_context(testing::fixture_kb());
  PromptConfig c;
  c.k = 2;
  EXPECT_EQ(detect("poor people", *ctx, c).references.size(), 2u);
}

TEST(Detector, Deterministic) {
  const auto ctx = testing::mock_context(testing::fixture_kb());
  const auto a = detect("muslims are all terrorists", *ctx);
  const auto b = detect("muslims are all terrorists", *ctx);
  EXPECT_EQ(a.verdict, b.verdict);
  EXPECT_EQ(a.references, b.references);
  EXPECT_EQ(a.prompt.user_text, b.prompt.user_text);
}

TEST(Detector, EmptyInput) {
  const auto ctx = testing::mock_context(testing::fixture_kb());
  EXPECT_THROW(detect("  \n ", *ctx), EmptyInput);
}

TEST(Detector, JudgeFailureIsNotAVerdict) {
  const auto ctx = testing::context_with_judge(testing::fixture_kb(), std::make_shared<testing::DownJudge>());
  EXPECT_THROW(detect("girls are bad at math", *ctx), BackendUnavailable);
}

TEST(Detector, ContextValidation) {
  auto ctx = std::make_shared<DetectorContext>(*testing::mock_context(testing::fixture_kb()));
  EXPECT_NO_THROW(ctx->validate());
  DetectorContext broken = *ctx;
  broken.judge.reset();
  EXPECT_THROW(broken.validate(), InvalidArgument);
  broken = *ctx;
  const std::vector<RawRecord> extra{{"a b c", "race"}};
  broken.kb = std::make_shared<const KnowledgeBase>(append(*ctx->kb, extra).kb);
  EXPECT_THROW(broken.validate(), IndexMismatch);
}

RemoteChatConfig remote_config(const std::string& url, int retries) {
  RemoteChatConfig c;
  c.url = url;
  c.model = "judge-test";
  c.http.retry.retries = retries;
  c.http.retry.initial_backoff_ms = 5;
  c.http.retry.jitter = false;
  c.http.timeout_ms = 2000;
  return c;
}

TEST(RemoteJudge, DownServerExhaustsRetries) {
  testing::StubServer stub;
  std::atomic<int> hits{0};
  stub.http().Post("/v1/chat/completions", [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 503;
  });
  stub.start();
  const auto ctx = testing::context_with_judge(testing::fixture_kb(),
                                               std::make_shared<RemoteChatBackend>(remote_config(stub.url(), 2)));
  EXPECT_THROW(detect("girls are bad at math", *ctx), BackendUnavailable);
  EXPECT_EQ(hits.load(), 3);
}

TEST(RemoteJudge, ClosedPortIsUnavailable) {
  int port = 0;
  {
    testing::StubServer probe;
    port = probe.start();
  }
  RemoteChatBackend judge(remote_config("http://127.0.0.1:" + std::to_string(port), 1));
  const auto prompt = build_prompt("x", {}, PromptConfig{});
  EXPECT_THROW(judge.complete(prompt), BackendUnavailable);
}

TEST(HttpUrl, SchemesAndTls) {
  const auto url = HttpUrl::parse("http://localhost:9/v1/chat");
  EXPECT_EQ(url.scheme_host_port, "http://localhost:9");
  EXPECT_EQ(url.path, "/v1/chat");
  EXPECT_THROW(HttpUrl::parse("ftp://host/x"), InvalidArgument);
  EXPECT_THROW(HttpUrl::parse("localhost:9"), InvalidArgument);
#ifdef CPPHTTPLIB_OPENSSL_SUPPORT
  EXPECT_NO_THROW(HttpUrl::parse("https://example.com/v1"));
#else
  EXPECT_THROW(HttpUrl::parse("https://example.com/v1"), InvalidArgument);
#endif
}

TEST(RemoteJudge, WireContract) {
  testing::StubServer stub;
  json seen;
  std::string auth;
  stub.http().Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    seen = json::parse(req.body);
    auth = req.get_header_value("Authorization");
    const json reply{{"choices", {{{"message", {{"role", "assistant"}, {"content", "No, the following SENTENCE is not biased."}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  stub.start();
  auto config = remote_config(stub.url(), 0);
  config.http.auth.header_value = "Bearer secret";
  const auto ctx = testing::context_with_judge(testing::fixture_kb(), std::make_shared<RemoteChatBackend>(config));
  const auto r = detect("the sky is blue", *ctx);
  EXPECT_TRUE(r.verdict.usable);
  EXPECT_FALSE(r.verdict.biased);
  EXPECT_EQ(seen["model"], "judge-test");
  EXPECT_EQ(seen["temperature"], 0.0);
  ASSERT_EQ(seen["messages"].size(), 2u);
  EXPECT_EQ(seen["messages"][0]["role"], "system");
  EXPECT_EQ(seen["messages"][1]["content"], r.prompt.user_text);
  EXPECT_EQ(auth, "Bearer secret");
}

TEST(RemoteJudge, MalformedBodyIsUnavailable) {
  EXPECT_THROW(parse_chat_response("{\"choices\": []}"), BackendUnavailable);
  EXPECT_THROW(parse_chat_response("not json"), BackendUnavailable);
  EXPECT_EQ(parse_chat_response(R"({"choices":[{"message":{"content":"hi"}}]})"), "hi");
}

TEST(RemoteJudge, EndpointAndEnvironment) {
  RemoteChatConfig c;
  c.url = "http://host:8000";
  EXPECT_EQ(c.endpoint(), "http://host:8000/v1/chat/completions");
  c.url = "http://host:8000/custom/path";
  EXPECT_EQ(c.endpoint(), "http://host:8000/custom/path");
  ::setenv("BA_TEST_URL", "http://judge:1", 1);
  ::setenv("BA_TEST_MODEL", "m1", 1);
  ::setenv("BA_TEST_KEY", "k1", 1);
  c.apply_env("BA_TEST");
  EXPECT_EQ(c.url, "http://judge:1");
  EXPECT_EQ(c.model, "m1");
  EXPECT_EQ(c.http.auth.header_name, "Authorization");
  EXPECT_EQ(c.http.auth.header_value, "Bearer k1");
}

class FlakyJudge final : public ChatBackend {
 public:
  std::string complete(const PromptBundle& prompt) const override {
    if (prompt.sentence.find("fail") != std::string::npos) throw BackendUnavailable("flaky");
    return "No, the following SENTENCE is not biased.";
  }
  std::string name() const override { return "flaky"; }
};

TEST(Batch, ErrorsAreIsolatedAndOrdered) {
  const auto ctx = testing::context_with_judge(testing::fixture_kb(), std::make_shared<FlakyJudge>());
  const std::vector<std::string> texts{"one", "fail here", "", "three"};
  const auto items = detect_batch(texts, *ctx, 3);
  ASSERT_EQ(items.size(), 4u);
  EXPECT_TRUE(items[0].ok());
  EXPECT_FALSE(items[1].ok());
  EXPECT_EQ(items[1].error_kind, ItemErrorKind::backend_unavailable);
  EXPECT_FALSE(items[2].ok());
  EXPECT_EQ(items[2].error_kind, ItemErrorKind::invalid_input);
  EXPECT_TRUE(items[3].ok());
  EXPECT_EQ(items[3].result->prompt.sentence, "three");
}

TEST(Batch, EquivalentToSequential) {
  const auto ctx = testing::mock_context(testing::fixture_kb());
  std::vector<std::string> texts;
  for (int i = 0; i < 50; ++i) {
    texts.push_back(i % 3 == 0 ? "they say poor people are lazy " + std::to_string(i) : "sentence " + std::to_string(i));
  }
  for (std::size_t workers : {1u, 4u, 16u}) {
    const auto items = detect_batch(texts, *ctx, workers);
    ASSERT_EQ(items.size(), texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      ASSERT_TRUE(items[i].ok());
      const auto single = detect(texts[i], *ctx);
      EXPECT_EQ(items[i].result->verdict, single.verdict);
      EXPECT_EQ(items[i].result->references, single.references);
    }
  }
}

TEST(Context, IndexCacheIsWritten) {
  testing::TempDir dir;
  DetectorSetup setup;
  setup.index_cache = dir / "kb.idx";
  const auto kb = std::make_shared<const KnowledgeBase>(testing::fixture_kb());
  const auto ctx = build_context(kb, setup);
  EXPECT_TRUE(std::filesystem::exists(setup.index_cache));
  EXPECT_EQ(*build_context(kb, setup)->index, *ctx->index);
}

}  // namespace
}  // namespace biasalert
