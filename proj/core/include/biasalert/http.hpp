#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace biasalert {

/// Optional header carrying credentials, e.g. {"Authorization", "Bearer ..."}.
struct HttpAuth {
  std::string header_name = "Authorization";
  std::string header_value;  // empty: no header sent
};

/// Fixed retry count with exponential backoff.
struct RetryPolicy {
  int retries = 2;  // attempts = retries + 1
  int initial_backoff_ms = 200;
  double multiplier = 2.0;
  int max_backoff_ms = 5000;
  bool jitter = true;  // off in tests for reproducible timing

  /// Delay before retry number `attempt` (0-based).
  std::chrono::milliseconds backoff(int attempt) const;
};

/// Scheme, authority and path of an absolute http(s) URL.
struct HttpUrl {
  std::string scheme_host_port;  // "http://127.0.0.1:8080"
  std::string path;              // "/v1/chat/completions"

  /// Throws InvalidArgument.
  static HttpUrl parse(std::string_view url);
};

struct HttpRequestOptions {
  HttpAuth auth;
  RetryPolicy retry;
  int timeout_ms = 30000;
};

/// POSTs a JSON body and returns the 2xx response body. Connection errors and
/// non-2xx statuses are retried; after the last attempt BackendUnavailable is
/// thrown with the final cause.
std::string post_json(std::string_view url, const std::string& body,
                      const HttpRequestOptions& options);

}  // namespace biasalert
