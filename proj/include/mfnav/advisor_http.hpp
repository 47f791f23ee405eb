#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "advisors.hpp"

namespace mfnav {

struct EndpointConfig {
  /// e.g. "http://localhost:8000/v1"; "/chat/completions" is appended.
  std::string base_url;
  std::string model;
  /// Name of the environment variable holding the API key.
  std::string api_key_env = "MFNAV_API_KEY";
  int timeout_ms = 30000;
};

/// OpenAI-compatible chat-completions client.
class HttpChatTransport final : public ChatTransport {
 public:
  explicit HttpChatTransport(EndpointConfig cfg) : cfg_(std::move(cfg)) {
    const auto scheme_end = cfg_.base_url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("endpoint base_url needs a scheme");
    const auto path_start = cfg_.base_url.find('/', scheme_end + 3);
    host_ = cfg_.base_url.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : cfg_.base_url.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  std::string complete(const std::string& system_prompt, const std::string& user_prompt) override {
    httplib::Client client(host_);
    const auto timeout = std::chrono::milliseconds(cfg_.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    httplib::Headers headers;
    if (!cfg_.api_key_env.empty()) {
      if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key)
        headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    const nlohmann::json body = {{"model", cfg_.model},
                                 {"temperature", 0},
                                 {"messages",
                                  {{{"role", "system"}, {"content", system_prompt}},
                                   {{"role", "user"}, {"content", user_prompt}}}}};

    auto res = client.Post(prefix_ + "/chat/completions", headers, body.dump(), "application/json");
    if (!res) throw AdvisorError("advisor request failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw AdvisorError("advisor returned HTTP " + std::to_string(res->status));
    try {
      const auto reply = nlohmann::json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw AdvisorError(std::string("advisor response is not a chat completion: ") + e.what());
    }
  }

 private:
  EndpointConfig cfg_;
  std::string host_;
  std::string prefix_;
};

}  // namespace mfnav
