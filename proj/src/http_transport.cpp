#include <memory>
#include <string>

#include "httplib.h"
#include "qta/error.hpp"
#include "qta/gateway.hpp"

namespace qta {

namespace {

class HttpTransport final : public Transport {
 public:
  explicit HttpTransport(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {
    const auto scheme_end = endpoint_.base_url.find("://");
    if (scheme_end == std::string::npos) {
      throw std::invalid_argument("base_url must include a scheme: " + endpoint_.base_url);
    }
    const auto path_start = endpoint_.base_url.find('/', scheme_end + 3);
    origin_ = endpoint_.base_url.substr(0, path_start);
    std::string prefix =
        path_start == std::string::npos ? std::string() : endpoint_.base_url.substr(path_start);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    path_ = prefix + "/chat/completions";
    if (!endpoint_.query.empty()) path_ += "?" + endpoint_.query;
  }

  HttpReply post_chat(const std::string& json_body) override {
    httplib::Client client(origin_);
    const auto secs = static_cast<time_t>(endpoint_.timeout_seconds);
    client.set_connection_timeout(secs);
    client.set_read_timeout(secs);
    client.set_write_timeout(secs);
    httplib::Headers headers;
    if (!endpoint_.api_key.empty()) {
      if (endpoint_.auth_header == "Authorization") {
        headers.emplace("Authorization", "Bearer " + endpoint_.api_key);
      } else {
        headers.emplace(endpoint_.auth_header, endpoint_.api_key);
      }
    }
    auto res = client.Post(path_, headers, json_body, "application/json");
    if (!res) {
      throw TransportError("HTTP request to " + origin_ + " failed: " +
                           httplib::to_string(res.error()));
    }
    return {res->status, res->body};
  }

 private:
  HttpEndpoint endpoint_;
  std::string origin_;
  std::string path_;
};

}  // namespace

std::shared_ptr<Transport> make_http_transport(HttpEndpoint endpoint) {
  return std::make_shared<HttpTransport>(std::move(endpoint));
}

}  // namespace qta
