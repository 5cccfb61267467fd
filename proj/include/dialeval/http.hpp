#pragma once

#include <chrono>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace dialeval {

struct HttpReply {
  int status = 0;
  std::string body;
};

/// Connection refused, timeout, DNS failure: anything without an HTTP status.
class TransportFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Url {
  std::string scheme_host_port;  // "http://localhost:8100"
  std::string path;              // "/v1/score"
};

/// Splits an absolute http(s) URL. Throws dialeval::Error(usage) when malformed.
Url parse_url(const std::string& url);

/// POSTs a JSON body. Throws TransportFailure when no response was received.
HttpReply http_post_json(const std::string& url, const std::string& body,
                         const std::vector<std::pair<std::string, std::string>>& headers,
                         std::chrono::milliseconds timeout);

}  // namespace dialeval
