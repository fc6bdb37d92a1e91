#ifndef CERTEVAL_REMOTE_HPP_
#define CERTEVAL_REMOTE_HPP_

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "certeval/backends.hpp"
#include "certeval/errors.hpp"
#include "certeval/types.hpp"

namespace certeval {

struct RemoteEndpointConfig {
  std::string host = "localhost";
  int port = 8080;
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string api_key_env = "CERTEVAL_API_KEY";  // header auth, key via env
  int max_retries = 5;
  int initial_backoff_ms = 200;
  int max_in_flight = 8;
};

inline void to_json(nlohmann::json& j, const RemoteEndpointConfig& c) {
  j = nlohmann::json{{"host", c.host},
                     {"port", c.port},
                     {"path", c.path},
                     {"model", c.model},
                     {"api_key_env", c.api_key_env},
                     {"max_retries", c.max_retries},
                     {"initial_backoff_ms", c.initial_backoff_ms},
                     {"max_in_flight", c.max_in_flight}};
}
inline void from_json(const nlohmann::json& j, RemoteEndpointConfig& c) {
  if (j.contains("host")) j.at("host").get_to(c.host);
  if (j.contains("port")) j.at("port").get_to(c.port);
  if (j.contains("path")) j.at("path").get_to(c.path);
  if (j.contains("model")) j.at("model").get_to(c.model);
  if (j.contains("api_key_env")) j.at("api_key_env").get_to(c.api_key_env);
  if (j.contains("max_retries")) j.at("max_retries").get_to(c.max_retries);
  if (j.contains("initial_backoff_ms")) j.at("initial_backoff_ms").get_to(c.initial_backoff_ms);
  if (j.contains("max_in_flight")) j.at("max_in_flight").get_to(c.max_in_flight);
}

// Chat-completion-style JSON-over-HTTP client. Samples fan out over a
// bounded number of worker threads and are reassembled in sample order;
// 429 and 5xx responses retry with exponential backoff.
class RemoteBackend : public Backend {
 public:
  explicit RemoteBackend(RemoteEndpointConfig config) : config_(std::move(config)) {}

  std::string id() const override { return "remote:" + config_.model; }

  std::vector<std::string> generate(const std::string& /*key*/, const std::string& prompt,
                                    const SamplingParams& params) override {
    params.validate();
    std::vector<std::string> texts(params.k);
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;

    auto worker = [&] {
      httplib::Client client(config_.host, config_.port);
      client.set_read_timeout(120, 0);
      for (int i; (i = next.fetch_add(1)) < params.k;) {
        try {
          texts[i] = request_one(client, prompt, params);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    const int n_workers = std::max(1, std::min(config_.max_in_flight, params.k));
    std::vector<std::thread> threads;
    threads.reserve(n_workers);
    for (int i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
    if (failure) std::rethrow_exception(failure);
    return texts;
  }

 private:
  std::string request_one(httplib::Client& client, const std::string& prompt,
                          const SamplingParams& params) {
    nlohmann::json body{{"model", config_.model},
                        {"messages", nlohmann::json::array({nlohmann::json{
                                         {"role", "user"}, {"content", prompt}}})},
                        {"temperature", params.temperature},
                        {"top_p", params.nucleus_p},
                        {"max_tokens", params.max_tokens},
                        {"n", 1}};
    if (!params.stop.empty()) body["stop"] = params.stop;

    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);

    int backoff_ms = config_.initial_backoff_ms;
    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
        backoff_ms *= 2;
      }
      auto res = client.Post(config_.path, headers, body.dump(), "application/json");
      if (!res) {
        last_error = "transport error";
        continue;
      }
      if (res->status == 429 || res->status >= 500) {
        last_error = "status " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw BackendUnavailableError("endpoint returned status " + std::to_string(res->status));
      try {
        auto j = nlohmann::json::parse(res->body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
      } catch (const nlohmann::json::exception& e) {
        throw BackendUnavailableError(std::string("malformed endpoint response: ") + e.what());
      }
    }
    throw BackendUnavailableError("endpoint failed after " + std::to_string(config_.max_retries) +
                                  " retries (" + last_error + ")");
  }

  RemoteEndpointConfig config_;
};

}  // namespace certeval

#endif  // CERTEVAL_REMOTE_HPP_
