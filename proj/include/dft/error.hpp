#pragma once

#include <stdexcept>
#include <string>

namespace dft {

/// Every failure surfaced by the toolkit carries a module-qualified code such
/// as "integrity.NotFound" so the CLI and the service can report it in one
/// machine-parsable line.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

} // namespace dft
