#include <httplib.h>

#include <json.hpp>

#include "fenrich/signing.hpp"

namespace fenrich::signing {
namespace {

struct Endpoint {
  std::string scheme_host_port;
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw DomainError("LLM url must start with http:// or https://");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

std::string chat_request_body(const LlmConfig& config, const std::string& prompt) {
  nlohmann::json body;
  body["model"] = config.model;
  body["temperature"] = config.temperature;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
  return body.dump();
}

std::string chat_response_text(std::string_view body) {
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(body);
    return parsed.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const std::exception& e) {
    throw TransportError(std::string("malformed chat-completion response: ") + e.what());
  }
}

Transport make_http_transport(const LlmConfig& config) {
  if (config.url.empty()) throw DomainError("LLM endpoint not configured (set FENRICH_LLM_URL)");
  const Endpoint ep = split_url(config.url);
  return [config, ep](const std::string& prompt) -> std::string {
    httplib::Client client(ep.scheme_host_port);
    client.set_connection_timeout(config.timeout);
    client.set_read_timeout(config.timeout);
    if (!config.api_key.empty()) client.set_bearer_token_auth(config.api_key);
    auto res = client.Post(ep.path, chat_request_body(config, prompt), "application/json");
    if (!res) throw TransportError("HTTP request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) {
      throw TransportError("HTTP status " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    return chat_response_text(res->body);
  };
}

}  // namespace fenrich::signing
