#pragma once
// NameProvider backed by an HTTP generation service.
//
//   POST <path>  {"entity_label": "...", "neighborhood": ["...", ...]}
//   200          {"fake_label": "..."}
//
// Transport failures and 5xx replies retry with doubling backoff; any other
// rejection or a malformed reply is a provider_error. The generator layer
// downgrades provider_error to a per-key-node warning, so one bad upstream
// answer costs one candidate, not the run.

#include <chrono>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "aura/error.hpp"
#include "aura/genpool.hpp"

namespace aura {

struct HttpProviderOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string path = "/fake_label";
    int timeout_ms = 2000;
    int retries = 2;       // extra attempts after the first
    int backoff_ms = 100;  // doubles per retry
};

class HttpNameProvider : public NameProvider {
public:
    explicit HttpNameProvider(HttpProviderOptions opt = {}) : opt_(std::move(opt)) {
        if (opt_.timeout_ms <= 0 || opt_.retries < 0 || opt_.backoff_ms < 0)
            throw invalid_input("bad provider options");
    }

    std::string request(const std::string& entity_label,
                        const std::vector<std::string>& neighborhood_summary) override {
        const std::string payload =
            nlohmann::json{{"entity_label", entity_label}, {"neighborhood", neighborhood_summary}}
                .dump();
        std::string last_error = "no attempt made";
        int delay = opt_.backoff_ms;
        for (int attempt = 0; attempt <= opt_.retries; ++attempt) {
            if (attempt > 0) {
                std::this_thread::sleep_for(std::chrono::milliseconds(delay));
                delay *= 2;
            }
            httplib::Client client(opt_.host, opt_.port);
            client.set_connection_timeout(opt_.timeout_ms / 1000,
                                          opt_.timeout_ms % 1000 * 1000);
            client.set_read_timeout(opt_.timeout_ms / 1000, opt_.timeout_ms % 1000 * 1000);
            client.set_write_timeout(opt_.timeout_ms / 1000, opt_.timeout_ms % 1000 * 1000);
            auto res = client.Post(opt_.path, payload, "application/json");
            if (!res) {
                last_error = "transport: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status >= 500) {
                last_error = "server status " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200)
                throw provider_error("provider rejected request (status " +
                                     std::to_string(res->status) + ")");
            return parse_reply(res->body);
        }
        throw provider_error("provider unreachable after " + std::to_string(opt_.retries + 1) +
                             " attempts (" + last_error + ")");
    }

private:
    static std::string parse_reply(const std::string& body) {
        nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.is_object() || !j.contains("fake_label") ||
            !j["fake_label"].is_string())
            throw provider_error("malformed provider reply");
        std::string label = j["fake_label"].get<std::string>();
        if (label.empty()) throw provider_error("provider returned an empty label");
        return label;
    }

    HttpProviderOptions opt_;
};

}  // namespace aura
