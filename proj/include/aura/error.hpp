#pragma once

#include <stdexcept>
#include <string>

namespace aura {

// Base class for all toolkit errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input (file content, base64, config). Carries a 1-based line
// number when the source is line-oriented (0 = not applicable).
struct parse_error : error {
    parse_error(const std::string& msg, std::size_t line_no = 0)
        : error(line_no ? msg + " (line " + std::to_string(line_no) + ")" : msg),
          line(line_no) {}
    std::size_t line;
};

// Lookup of an entity/relation/triple that does not exist.
struct not_found_error : error {
    using error::error;
};

// Caller violated a documented precondition.
struct invalid_input : error {
    using error::error;
};

// Authenticated decryption failed: wrong key or tampered ciphertext.
// Deliberately distinct from parse_error (malformed base64 is not tampering).
struct auth_error : error {
    using error::error;
};

// Dense index no longer matches the graph it was built from.
struct stale_index_error : error {
    using error::error;
};

// Name-provider request failed after retries.
struct provider_error : error {
    using error::error;
};

struct config_error : error {
    using error::error;
};

}  // namespace aura
