#include "biasalert/audit_log.hpp"

#include "biasalert/error.hpp"
#include "json_io.hpp"

namespace biasalert {

std::string_view to_string(AuditAction action) noexcept {
  switch (action) {
    case AuditAction::passed: return "passed";
    case AuditAction::blocked: return "blocked";
    case AuditAction::flagged: return "flagged";
    case AuditAction::error: return "error";
  }
  return "error";
}

std::string to_json_line(const AuditRecord& record) {
  using json_io::json;
  json verdict = nullptr;
  if (record.verdict) {
    const auto& v = *record.verdict;
    verdict = {{"usable", v.usable},
               {"biased", v.biased},
               {"bias_type", v.bias_type ? json(to_string(*v.bias_type)) : json(nullptr)},
               {"group", json_io::optional_to_json(v.group)},
               {"attribute", json_io::optional_to_json(v.attribute)}};
  }
  const json doc{{"request_id", record.request_id},
                 {"endpoint", record.endpoint},
                 {"timestamp", record.timestamp},
                 {"verdict", std::move(verdict)},
                 {"action", to_string(record.action)},
                 {"audit_latency_ms", record.audit_latency_ms},
                 {"upstream_latency_ms", record.upstream_latency_ms},
                 {"error", record.error}};
  return doc.dump();
}

AuditLog::AuditLog(const std::filesystem::path& path) : file_(path, std::ios::app | std::ios::binary) {
  if (!file_) throw IoError("cannot open audit log " + path.string());
}

std::string AuditLog::append(AuditRecord record) {
  std::lock_guard lock(mutex_);
  if (record.request_id.empty()) record.request_id = "req-" + std::to_string(next_id_);
  ++next_id_;

  ++counters_.requests;
  switch (record.action) {
    case AuditAction::passed: ++counters_.passed; break;
    case AuditAction::blocked: ++counters_.blocked; break;
    case AuditAction::flagged: ++counters_.flagged; break;
    case AuditAction::error: ++counters_.errors; break;
  }
  audit_latency_sum_ += record.audit_latency_ms;
  counters_.mean_audit_latency_ms = audit_latency_sum_ / static_cast<double>(counters_.requests);
  if (record.endpoint == "generate") {
    upstream_latency_sum_ += record.upstream_latency_ms;
    ++upstream_samples_;
    counters_.mean_upstream_latency_ms = upstream_latency_sum_ / static_cast<double>(upstream_samples_);
  }

  if (file_.is_open()) {
    file_ << to_json_line(record) << '\n';
    file_.flush();
  }
  std::string id = record.request_id;
  records_.push_back(std::move(record));
  return id;
}

std::size_t AuditLog::size() const {
  std::lock_guard lock(mutex_);
  return records_.size();
}

std::vector<AuditRecord> AuditLog::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

AuditCounters AuditLog::counters() const {
  std::lock_guard lock(mutex_);
  return counters_;
}

}  // namespace biasalert
