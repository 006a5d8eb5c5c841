#pragma once

#include <string>
#include <vector>

#include "fusion/generators.hpp"

namespace fusion {

// POST {base}/chat/completions with an OpenAI-style payload; returns
// choices[0].message.content. Throws TransportError on network failure or
// non-200 status, ParseError on a malformed reply envelope.
std::string chat_completion(const LlmEndpointConfig& endpoint, const std::string& prompt);

struct DocumentBlock {
    std::string content;
    bool multiple_blocks = false;  // extra fenced blocks were ignored
};

// Extracts the first fenced code block (``` or ```json). Falls back to the
// whole reply when no fence is present.
DocumentBlock extract_document_block(const std::string& reply);

}  // namespace fusion
