#include "biasalert/http.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include <httplib.h>

#include "biasalert/error.hpp"

namespace biasalert {

std::chrono::milliseconds RetryPolicy::backoff(int attempt) const {
  double delay = static_cast<double>(initial_backoff_ms) * std::pow(multiplier, attempt);
  delay = std::min(delay, static_cast<double>(max_backoff_ms));
  if (jitter) {
    thread_local std::mt19937 rng{std::random_device{}()};
    delay *= std::uniform_real_distribution<double>(0.5, 1.5)(rng);
  }
  return std::chrono::milliseconds(static_cast<long long>(std::max(0.0, delay)));
}

HttpUrl HttpUrl::parse(std::string_view url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string_view::npos) {
    throw InvalidArgument("URL needs a scheme: " + std::string(url));
  }
  const auto scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw InvalidArgument("unsupported URL scheme: " + std::string(url));
  }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") {
    throw InvalidArgument("https URL needs a build with BIASALERT_WITH_TLS: " + std::string(url));
  }
#endif
  const auto path_start = url.find('/', scheme_end + 3);
  HttpUrl out;
  if (path_start == std::string_view::npos) {
    out.scheme_host_port = std::string(url);
    out.path = "/";
  } else {
    out.scheme_host_port = std::string(url.substr(0, path_start));
    out.path = std::string(url.substr(path_start));
  }
  if (out.scheme_host_port.size() <= scheme_end + 3) {
    throw InvalidArgument("URL has no host: " + std::string(url));
  }
  return out;
}

std::string post_json(std::string_view url, const std::string& body,
                      const HttpRequestOptions& options) {
  const HttpUrl target = HttpUrl::parse(url);
  httplib::Headers headers;
  if (!options.auth.header_value.empty()) {
    headers.emplace(options.auth.header_name, options.auth.header_value);
  }

  std::string last_error;
  const int attempts = std::max(0, options.retry.retries) + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(options.retry.backoff(attempt - 1));

    httplib::Client client(target.scheme_host_port);
    const auto timeout = std::chrono::milliseconds(options.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    auto result = client.Post(target.path, headers, body, "application/json");
    if (!result) {
      last_error = httplib::to_string(result.error());
      continue;
    }
    if (result->status >= 200 && result->status < 300) return result->body;
    last_error = "HTTP " + std::to_string(result->status);
  }
  throw BackendUnavailable(std::string(url) + ": " + last_error + " after " +
                           std::to_string(attempts) + " attempt(s)");
}

}  // namespace biasalert
