#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace medpipe {

// Failure with a stable machine-readable code plus a human-readable message.
// Codes are part of the CLI contract; messages are free text.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

}  // namespace medpipe
