#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "biasalert/bias_type.hpp"

namespace biasalert {

enum class AuditAction {
  passed,
  blocked,
  flagged,
  error,  // upstream or judge failure; no text reached the client
};

std::string_view to_string(AuditAction action) noexcept;

struct VerdictSummary {
  bool usable = false;
  bool biased = false;
  std::optional<BiasType> bias_type;
  std::optional<std::string> group;
  std::optional<std::string> attribute;
};

struct AuditRecord {
  std::string request_id;
  std::string endpoint;   // "audit" | "generate"
  std::string timestamp;  // UTC, ISO 8601
  std::optional<VerdictSummary> verdict;
  AuditAction action = AuditAction::passed;
  double audit_latency_ms = 0.0;
  double upstream_latency_ms = 0.0;
  std::string error;
};

/// One JSON object per line.
std::string to_json_line(const AuditRecord& record);

struct AuditCounters {
  std::size_t requests = 0;
  std::size_t passed = 0;
  std::size_t blocked = 0;
  std::size_t flagged = 0;
  std::size_t errors = 0;
  double mean_audit_latency_ms = 0.0;
  double mean_upstream_latency_ms = 0.0;
};

/// Append-only audit trail, optionally mirrored to a JSON-lines file.
/// All members are safe to call concurrently.
class AuditLog {
 public:
  AuditLog() = default;
  /// Opens `path` for append. Throws IoError.
  explicit AuditLog(const std::filesystem::path& path);

  /// Assigns a request id when `record.request_id` is empty; returns it.
  std::string append(AuditRecord record);

  std::size_t size() const;
  std::vector<AuditRecord> records() const;
  AuditCounters counters() const;

 private:
  mutable std::mutex mutex_;
  std::vector<AuditRecord> records_;
  std::ofstream file_;
  std::uint64_t next_id_ = 1;
  double audit_latency_sum_ = 0.0;
  double upstream_latency_sum_ = 0.0;
  std::size_t upstream_samples_ = 0;
  AuditCounters counters_;
};

}  // namespace biasalert
