#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "dialeval/error.hpp"
#include "dialeval/http.hpp"

namespace dialeval {

Url parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw usage_error("malformed endpoint URL '" + url + "'");
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw usage_error("unsupported URL scheme in '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  if (path_start == scheme_end + 3) throw usage_error("missing host in '" + url + "'");
  return {url.substr(0, path_start), url.substr(path_start)};
}

HttpReply http_post_json(const std::string& url, const std::string& body,
                         const std::vector<std::pair<std::string, std::string>>& headers,
                         std::chrono::milliseconds timeout) {
  const Url u = parse_url(url);
  httplib::Client client(u.scheme_host_port);
  const auto secs = timeout.count() / 1000;
  const auto usecs = (timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  auto res = client.Post(u.path, h, body, "application/json");
  if (!res) throw TransportFailure("POST " + url + " failed: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

}  // namespace dialeval
