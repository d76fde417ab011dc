#include "globalrag/http.hpp"

#include <cmath>
#include <thread>

#include <httplib.h>
#include <spdlog/spdlog.h>

#include "globalrag/errors.hpp"

namespace globalrag {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("URL without scheme: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResponse HttplibTransport::post(const std::string& url, const std::string& body,
                                    const HttpHeaders& headers) {
  auto [origin, path] = split_url(url);
  httplib::Client client(origin);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(path, h, body, "application/json");
  if (!res) {
    spdlog::debug("POST {} failed: {}", url, httplib::to_string(res.error()));
    return {0, {}};
  }
  return {res->status, res->body};
}

bool is_transient(int status) { return status == 0 || status == 429 || status >= 500; }

HttpResponse post_with_retry(HttpTransport& transport, const std::string& url,
                             const std::string& body, const HttpHeaders& headers,
                             const RetryPolicy& policy, int* retries) {
  int attempt = 0;
  for (;;) {
    HttpResponse res = transport.post(url, body, headers);
    if (retries) *retries = attempt;
    if (res.status >= 200 && res.status < 300) return res;
    if (!is_transient(res.status)) {
      throw TransportError("POST " + url + " returned HTTP " + std::to_string(res.status));
    }
    if (attempt >= policy.max_retries) {
      throw TransportError("POST " + url + " failed after " + std::to_string(attempt) +
                           " retries (last status " + std::to_string(res.status) + ")");
    }
    auto delay = std::chrono::milliseconds(static_cast<long long>(
        static_cast<double>(policy.initial_backoff.count()) * std::pow(policy.multiplier, attempt)));
    ++attempt;
    spdlog::warn("POST {} returned status {}; retry {}/{} in {} ms", url, res.status, attempt,
                 policy.max_retries, delay.count());
    if (policy.sleep) {
      policy.sleep(delay);
    } else {
      std::this_thread::sleep_for(delay);
    }
  }
}

}  // namespace globalrag
