#include "fusion/llm_client.hpp"

#include <cstdlib>

#include <httplib.h>
#include <json.hpp>

namespace fusion {

using nlohmann::json;

std::string chat_completion(const LlmEndpointConfig& endpoint, const std::string& prompt) {
    if (endpoint.base_url.empty()) {
        throw ConfigError("chat_completion: empty base URL");
    }
    httplib::Client client(endpoint.base_url);
    client.set_connection_timeout(endpoint.timeout_s, 0);
    client.set_read_timeout(endpoint.timeout_s, 0);

    httplib::Headers headers;
    if (!endpoint.api_key_env.empty()) {
        if (const char* key = std::getenv(endpoint.api_key_env.c_str())) {
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }
    }

    const json payload = {
        {"model", endpoint.model},
        {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
        {"temperature", endpoint.temperature},
        {"max_tokens", endpoint.max_tokens},
    };
    auto res = client.Post("/chat/completions", headers, payload.dump(), "application/json");
    if (!res) {
        throw TransportError("chat_completion: request failed (" +
                             httplib::to_string(res.error()) + ")");
    }
    if (res->status != 200) {
        throw TransportError("chat_completion: HTTP " + std::to_string(res->status));
    }
    try {
        const json reply = json::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const std::exception& e) {
        throw ParseError(std::string("chat_completion: malformed reply envelope: ") + e.what());
    }
}

DocumentBlock extract_document_block(const std::string& reply) {
    DocumentBlock block;
    const std::string fence = "```";
    std::size_t open = reply.find(fence);
    if (open == std::string::npos) {
        block.content = reply;
        return block;
    }
    std::size_t start = reply.find('\n', open);
    if (start == std::string::npos) {
        block.content = reply;
        return block;
    }
    ++start;
    const std::size_t close = reply.find(fence, start);
    if (close == std::string::npos) {
        block.content = reply.substr(start);
        return block;
    }
    block.content = reply.substr(start, close - start);
    if (reply.find(fence, close + fence.size()) != std::string::npos) {
        block.multiple_blocks = true;
    }
    return block;
}

}  // namespace fusion
