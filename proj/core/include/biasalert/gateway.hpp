#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>

#include "biasalert/audit_log.hpp"
#include "biasalert/backends.hpp"
#include "biasalert/detector.hpp"
#include "biasalert/knowledge_db.hpp"

namespace biasalert {

/// What the gateway does when the judge cannot be reached.
enum class JudgeFailurePolicy {
  fail_closed,  // refuse with 503; no upstream text is released
  fail_open,    // release the upstream text unaudited, marked as such
};

struct GatewayConfig {
  std::string host = "127.0.0.1";
  int port = 8088;  // 0 picks a free port
  std::string block_message =
      "This response was withheld because it was judged to contain social bias.";
  bool audit_only = false;
  JudgeFailurePolicy judge_failure = JudgeFailurePolicy::fail_closed;
  std::size_t worker_threads = 16;  // concurrent request cap
  std::filesystem::path audit_log;  // empty: in-memory only
  /// Source for POST /v1/reload without a body, and sink for appended
  /// records. Empty disables file reloads.
  std::filesystem::path kb_path;
  AliasMap aliases = AliasMap::defaults();

  /// BIASALERT_LISTEN ("host:port") and BIASALERT_KB_PATH.
  void apply_env();
};

struct HttpReply {
  int status = 200;
  std::string body;  // JSON
};

/// Moderation service: forwards prompts upstream, audits each complete
/// response with the detector, and blocks biased output.
///
/// The detector context is an immutable value swapped under a mutex on
/// reload; requests keep the context they started with. The audit log is the
/// only other shared state.
class Gateway {
 public:
  Gateway(GatewayConfig config, DetectorSetup setup, std::shared_ptr<const KnowledgeBase> kb,
          std::shared_ptr<const GenerationBackend> upstream);
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  // Endpoint handlers, usable without a socket.
  HttpReply health() const;                         // GET  /healthz
  HttpReply audit(std::string_view body);           // POST /v1/audit
  HttpReply generate(std::string_view body);        // POST /v1/generate
  HttpReply reload(std::string_view body);          // POST /v1/reload
  HttpReply stats() const;                          // GET  /v1/stats

  /// Binds and serves on a background thread. Throws IoError on bind failure.
  void start();
  /// Blocks until stop() is called.
  void wait();
  void stop();
  int port() const noexcept { return bound_port_; }

  std::shared_ptr<const DetectorContext> context() const;
  const AuditLog& audit_log() const noexcept { return log_; }
  const GatewayConfig& config() const noexcept { return config_; }

 private:
  GatewayConfig config_;
  DetectorSetup setup_;
  std::shared_ptr<const GenerationBackend> upstream_;
  AuditLog log_;

  mutable std::mutex context_mutex_;
  std::shared_ptr<const DetectorContext> context_;
  std::mutex reload_mutex_;

  struct Server;
  std::unique_ptr<Server> server_;
  int bound_port_ = 0;
};

}  // namespace biasalert
