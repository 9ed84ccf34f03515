#pragma once

#include <stdexcept>
#include <string>

namespace polynn {

// Error categories double as CLI exit codes (see README, "Exit codes").
enum class ErrorCode : int {
    Usage = 1,
    Io = 2,
    Data = 3,
    Numerical = 4,
    MemoryBudget = 5,
    ModelFormat = 6,
    Unsupported = 7,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[nodiscard]] inline int exit_code(ErrorCode code) noexcept { return static_cast<int>(code); }

}  // namespace polynn
