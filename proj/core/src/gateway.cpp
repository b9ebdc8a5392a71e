#include "biasalert/gateway.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <future>
#include <thread>

#include <httplib.h>

#include "biasalert/error.hpp"
#include "biasalert/text.hpp"
#include "json_io.hpp"

namespace biasalert {
namespace {

using json_io::json;
using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t secs = std::chrono::system_clock::to_time_t(now);
  const auto millis =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[32];
  const auto n = std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%.*s.%03dZ", static_cast<int>(n), buf, static_cast<int>(millis));
  return out;
}

HttpReply reply(int status, const json& body) { return {status, body.dump()}; }

HttpReply error_reply(int status, std::string_view code, std::string_view message) {
  return reply(status, {{"error", {{"code", code}, {"message", message}}}});
}

VerdictSummary summarize(const Verdict& v) {
  return {v.usable, v.biased, v.bias_type, v.group, v.attribute};
}

// Parses a JSON object body; nullopt (with `error` set) when malformed.
std::optional<json> parse_body(std::string_view body, HttpReply& error) {
  auto doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    error = error_reply(400, "bad_request", "body must be a JSON object");
    return std::nullopt;
  }
  return doc;
}

std::optional<std::string> string_member(const json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

void GatewayConfig::apply_env() {
  if (const char* listen = std::getenv("BIASALERT_LISTEN"); listen != nullptr && *listen != '\0') {
    const std::string_view value(listen);
    const auto colon = value.rfind(':');
    if (colon == std::string_view::npos) throw InvalidArgument("BIASALERT_LISTEN must be host:port");
    host = std::string(value.substr(0, colon));
    try {
      port = std::stoi(std::string(value.substr(colon + 1)));
    } catch (const std::exception&) {
      throw InvalidArgument("BIASALERT_LISTEN has a bad port");
    }
  }
  if (const char* kb = std::getenv("BIASALERT_KB_PATH"); kb != nullptr && *kb != '\0') kb_path = kb;
}

struct Gateway::Server {
  httplib::Server http;
  std::thread thread;
  std::mutex mutex;
  std::promise<void> done;
  std::shared_future<void> finished = done.get_future().share();
};

Gateway::Gateway(GatewayConfig config, DetectorSetup setup, std::shared_ptr<const KnowledgeBase> kb,
                 std::shared_ptr<const GenerationBackend> upstream)
    : config_(std::move(config)),
      setup_(std::move(setup)),
      upstream_(std::move(upstream)),
      log_(config_.audit_log.empty() ? AuditLog() : AuditLog(config_.audit_log)) {
  setup_.aliases = config_.aliases;
  context_ = build_context(std::move(kb), setup_);
}

Gateway::~Gateway() { stop(); }

std::shared_ptr<const DetectorContext> Gateway::context() const {
  std::lock_guard lock(context_mutex_);
  return context_;
}

HttpReply Gateway::health() const {
  const auto ctx = context();
  return reply(200, {{"status", "ok"},
                     {"kb_version", ctx->kb->version()},
                     {"embedder", ctx->embedder->id()},
                     {"entries", ctx->kb->size()},
                     {"judge", ctx->judge->name()}});
}

HttpReply Gateway::stats() const {
  const auto c = log_.counters();
  const auto ctx = context();
  return reply(200, {{"requests", c.requests},
                     {"passed", c.passed},
                     {"blocked", c.blocked},
                     {"flagged", c.flagged},
                     {"errors", c.errors},
                     {"mean_audit_latency_ms", c.mean_audit_latency_ms},
                     {"mean_upstream_latency_ms", c.mean_upstream_latency_ms},
                     {"kb_version", ctx->kb->version()}});
}

HttpReply Gateway::audit(std::string_view body) {
  const auto start = Clock::now();
  HttpReply bad;
  const auto doc = parse_body(body, bad);
  if (!doc) return bad;
  const auto text = string_member(*doc, "text");
  if (!text || text::trim(*text).empty()) return error_reply(422, "empty_text", "'text' must be a non-empty string");

  const auto ctx = context();
  PromptConfig prompt = ctx->prompt;
  if (const auto k = doc->find("k"); k != doc->end()) {
    if (!k->is_number_integer() || k->get<long long>() < 1) {
      return error_reply(422, "bad_k", "'k' must be a positive integer");
    }
    prompt.k = k->get<std::size_t>();
  }

  AuditRecord record;
  record.endpoint = "audit";
  record.timestamp = utc_timestamp();
  try {
    const auto result = detect(*text, *ctx, prompt);
    record.verdict = summarize(result.verdict);
    record.action = result.verdict.usable && result.verdict.biased ? AuditAction::flagged : AuditAction::passed;
    record.audit_latency_ms = ms_since(start);
    json refs = json::array();
    for (const auto& r : result.references) refs.push_back(json_io::to_json(r));
    const json out{{"request_id", log_.append(record)},
                   {"verdict", json_io::to_json(result.verdict)},
                   {"references", std::move(refs)},
                   {"audit_latency_ms", record.audit_latency_ms},
                   {"kb_version", ctx->kb->version()}};
    return reply(200, out);
  } catch (const BackendUnavailable& e) {
    record.action = AuditAction::error;
    record.error = e.what();
    record.audit_latency_ms = ms_since(start);
    log_.append(record);
    return error_reply(503, "judge_unavailable", e.what());
  }
}

HttpReply Gateway::generate(std::string_view body) {
  HttpReply bad;
  const auto doc = parse_body(body, bad);
  if (!doc) return bad;
  const auto prompt = string_member(*doc, "prompt");
  if (!prompt || text::trim(*prompt).empty()) {
    return error_reply(422, "empty_prompt", "'prompt' must be a non-empty string");
  }
  if (!upstream_) return error_reply(502, "no_upstream", "no upstream model configured");

  AuditRecord record;
  record.endpoint = "generate";
  record.timestamp = utc_timestamp();
  record.request_id = string_member(*doc, "id").value_or("");

  const auto upstream_start = Clock::now();
  std::string response;
  try {
    response = upstream_->generate({record.request_id, *prompt});
  } catch (const std::exception& e) {
    record.upstream_latency_ms = ms_since(upstream_start);
    record.action = AuditAction::error;
    record.error = std::string("upstream: ") + e.what();
    log_.append(record);
    return error_reply(502, "upstream_unavailable", e.what());
  }
  record.upstream_latency_ms = ms_since(upstream_start);

  const auto audit_start = Clock::now();
  const auto ctx = context();
  json out{{"upstream_latency_ms", record.upstream_latency_ms}, {"kb_version", ctx->kb->version()}};

  if (text::trim(response).empty()) {
    record.audit_latency_ms = ms_since(audit_start);
    record.action = AuditAction::passed;
    out["request_id"] = log_.append(record);
    out["status"] = "ok";
    out["text"] = response;
    out["verdict"] = nullptr;
    out["audit_latency_ms"] = record.audit_latency_ms;
    return reply(200, out);
  }

  std::optional<Verdict> verdict;
  try {
    verdict = detect(response, *ctx).verdict;
  } catch (const BackendUnavailable& e) {
    record.error = std::string("judge: ") + e.what();
  }
  record.audit_latency_ms = ms_since(audit_start);
  out["audit_latency_ms"] = record.audit_latency_ms;

  if (!verdict) {
    if (config_.judge_failure == JudgeFailurePolicy::fail_closed) {
      record.action = AuditAction::error;
      const auto id = log_.append(record);
      return reply(503, {{"request_id", id},
                         {"status", "error"},
                         {"error", {{"code", "judge_unavailable"}, {"message", record.error}}},
                         {"upstream_latency_ms", record.upstream_latency_ms},
                         {"audit_latency_ms", record.audit_latency_ms}});
    }
    record.action = AuditAction::passed;
    out["request_id"] = log_.append(record);
    out["status"] = "ok";
    out["text"] = response;
    out["verdict"] = nullptr;
    out["audited"] = false;
    return reply(200, out);
  }

  record.verdict = summarize(*verdict);
  out["verdict"] = json_io::to_json(*verdict);
  out["audited"] = true;
  const bool biased = verdict->usable && verdict->biased;
  if (biased && !config_.audit_only) {
    record.action = AuditAction::blocked;
    out["status"] = "blocked";
    out["text"] = config_.block_message;
  } else {
    record.action = biased ? AuditAction::flagged : AuditAction::passed;
    out["status"] = "ok";
    out["text"] = response;
    if (biased) out["flagged"] = true;
  }
  out["request_id"] = log_.append(record);
  return reply(200, out);
}

HttpReply Gateway::reload(std::string_view body) {
  std::lock_guard reload_lock(reload_mutex_);
  const auto current = context();
  std::shared_ptr<const KnowledgeBase> next;
  json ingest_report = nullptr;

  try {
    json doc = json::object();
    if (!text::trim(body).empty()) {
      HttpReply bad;
      auto parsed = parse_body(body, bad);
      if (!parsed) return bad;
      doc = std::move(*parsed);
    }
    if (const auto records = doc.find("records"); records != doc.end()) {
      if (!records->is_array()) return error_reply(400, "bad_request", "'records' must be an array");
      std::vector<RawRecord> raw;
      for (const auto& r : *records) {
        if (!r.is_object()) return error_reply(400, "bad_request", "each record must be an object");
        raw.push_back({string_member(r, "statement").value_or(""), string_member(r, "type_label").value_or("")});
      }
      auto result = append(*current->kb, raw, config_.aliases);
      ingest_report = json_io::to_json(result.report);
      next = std::make_shared<const KnowledgeBase>(std::move(result.kb));
      if (!config_.kb_path.empty()) save(*next, config_.kb_path);
    } else {
      std::filesystem::path path = config_.kb_path;
      if (const auto p = string_member(doc, "path")) path = *p;
      if (path.empty()) return error_reply(400, "no_kb_path", "no knowledge base path configured");
      next = std::make_shared<const KnowledgeBase>(load(path));
    }

    // Build outside the swap lock so in-flight requests keep running.
    auto ctx = build_context(next, setup_);
    {
      std::lock_guard lock(context_mutex_);
      context_ = std::move(ctx);
    }
  } catch (const SchemaError& e) {
    return error_reply(422, "bad_kb", e.what());
  } catch (const IoError& e) {
    return error_reply(500, "io_error", e.what());
  } catch (const BackendUnavailable& e) {
    return error_reply(503, "embedder_unavailable", e.what());
  }

  return reply(200, {{"status", "ok"},
                     {"previous_kb_version", current->kb->version()},
                     {"kb_version", next->version()},
                     {"entries", next->size()},
                     {"ingest", std::move(ingest_report)}});
}

void Gateway::start() {
  if (server_) throw InvalidArgument("gateway already started");
  server_ = std::make_unique<Server>();
  auto& http = server_->http;
  const std::size_t workers = std::max<std::size_t>(config_.worker_threads, 1);
  http.new_task_queue = [workers] { return new httplib::ThreadPool(workers); };

  const auto send = [](httplib::Response& res, const HttpReply& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  http.Get("/healthz", [this, send](const httplib::Request&, httplib::Response& res) { send(res, health()); });
  http.Get("/v1/stats", [this, send](const httplib::Request&, httplib::Response& res) { send(res, stats()); });
  http.Post("/v1/audit",
            [this, send](const httplib::Request& req, httplib::Response& res) { send(res, audit(req.body)); });
  http.Post("/v1/generate",
            [this, send](const httplib::Request& req, httplib::Response& res) { send(res, generate(req.body)); });
  http.Post("/v1/reload",
            [this, send](const httplib::Request& req, httplib::Response& res) { send(res, reload(req.body)); });
  http.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    send(res, error_reply(500, "internal", message));
  });

  if (config_.port == 0) {
    bound_port_ = http.bind_to_any_port(config_.host);
  } else {
    bound_port_ = http.bind_to_port(config_.host, config_.port) ? config_.port : -1;
  }
  if (bound_port_ <= 0) {
    server_.reset();
    bound_port_ = 0;
    throw IoError("cannot bind " + config_.host + ":" + std::to_string(config_.port));
  }
  server_->thread = std::thread([s = server_.get()] {
    s->http.listen_after_bind();
    s->done.set_value();
  });
  http.wait_until_ready();
}

void Gateway::wait() {
  if (!server_) return;
  auto finished = server_->finished;
  finished.wait();
}

void Gateway::stop() {
  if (!server_) return;
  std::lock_guard lock(server_->mutex);
  server_->http.stop();
  if (server_->thread.joinable()) server_->thread.join();
}

}  // namespace biasalert
