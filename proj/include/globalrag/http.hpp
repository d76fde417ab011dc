#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace globalrag {

using HttpHeaders = std::vector<std::pair<std::string, std::string>>;

struct HttpResponse {
  int status = 0;  // 0 means the connection itself failed
  std::string body;
};

/// Minimal POST-only transport so remote backends can be tested against fakes.
class HttpTransport {
public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post(const std::string& url, const std::string& body,
                            const HttpHeaders& headers) = 0;
};

/// cpp-httplib backed transport; accepts http:// and https:// URLs.
class HttplibTransport final : public HttpTransport {
public:
  explicit HttplibTransport(std::chrono::seconds timeout = std::chrono::seconds(120))
      : timeout_(timeout) {}
  HttpResponse post(const std::string& url, const std::string& body,
                    const HttpHeaders& headers) override;

private:
  std::chrono::seconds timeout_;
};

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{500};
  double multiplier = 2.0;
  /// Replaceable so tests do not sleep.
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// Connection failures, 429 and 5xx are retried with exponential backoff.
bool is_transient(int status);

/// POSTs with retries. Returns the first 2xx response; throws TransportError
/// when retries are exhausted or a non-transient status is returned.
/// `retries` receives the number of retries performed.
HttpResponse post_with_retry(HttpTransport& transport, const std::string& url,
                             const std::string& body, const HttpHeaders& headers,
                             const RetryPolicy& policy, int* retries = nullptr);

}  // namespace globalrag
