#pragma once

#include <chrono>
#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "gecattack/backends.hpp"
#include "gecattack/core.hpp"

namespace gecattack {

// ChatModel speaking the OpenAI-compatible /v1/chat/completions protocol.
// This is the one real backend the framework ships; the scorer interfaces
// stay integration points for neural runtimes.
class HttpChatModel final : public ChatModel {
public:
    struct Options {
        std::string base_url;  // e.g. http://127.0.0.1:8080
        std::string model;
        std::string api_key_env = "OPENAI_API_KEY";
        std::string path = "/v1/chat/completions";
        double timeout_s = 30.0;
        int retries = 3;
        double temperature = 0.0;
    };

    explicit HttpChatModel(Options options) : options_(std::move(options)) {
        if (options_.base_url.empty()) throw ConfigError("http chat backend needs a base_url");
    }

    std::string complete(const std::string& prompt) const override {
        nlohmann::json body;
        body["model"] = options_.model;
        body["temperature"] = options_.temperature;
        body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});
        const std::string payload = body.dump();

        std::string last_error;
        const int attempts = 1 + std::max(0, options_.retries);
        for (int attempt = 0; attempt < attempts; ++attempt) {
            if (attempt > 0)
                std::this_thread::sleep_for(std::chrono::milliseconds(50L * attempt));
            httplib::Client client(options_.base_url);
            client.set_connection_timeout(timeout());
            client.set_read_timeout(timeout());
            client.set_write_timeout(timeout());
            httplib::Headers headers;
            if (const char* key = std::getenv(options_.api_key_env.c_str()); key && *key)
                headers.emplace("Authorization", std::string("Bearer ") + key);
            auto res = client.Post(options_.path, headers, payload, "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status != 200) {
                last_error = "http status " + std::to_string(res->status);
                continue;
            }
            try {
                const nlohmann::json j = nlohmann::json::parse(res->body);
                return j.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                last_error = std::string("bad completion payload: ") + e.what();
            }
        }
        throw BackendError("chat backend " + options_.base_url + " failed after " +
                           std::to_string(attempts) + " attempt(s): " + last_error);
    }

private:
    std::chrono::milliseconds timeout() const {
        return std::chrono::milliseconds(static_cast<long>(options_.timeout_s * 1000.0));
    }

    Options options_;
};

}  // namespace gecattack
