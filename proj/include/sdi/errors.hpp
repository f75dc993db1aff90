#pragma once

#include <stdexcept>
#include <string>

namespace sdi {

// Error categories; the shared-library boundary maps these onto status codes
// and the CLI onto exit codes.
enum class ErrorCode {
    generic = 1,
    config = 2,
    blowup = 3,
    io = 4,
    hypothesis = 5,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}
    explicit Error(const std::string& msg) : Error(ErrorCode::generic, msg) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg, int line = 0)
        : Error(ErrorCode::config, line > 0 ? msg + " (line " + std::to_string(line) + ")" : msg),
          line_(line) {}

    [[nodiscard]] int line() const noexcept { return line_; }

private:
    int line_;
};

class BlowupError : public Error {
public:
    BlowupError(const std::string& msg, long long path, long long step)
        : Error(ErrorCode::blowup,
                msg + " (path " + std::to_string(path) + ", step " + std::to_string(step) + ")"),
          path_(path), step_(step) {}

    [[nodiscard]] long long path() const noexcept { return path_; }
    [[nodiscard]] long long step() const noexcept { return step_; }

private:
    long long path_;
    long long step_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(ErrorCode::io, msg) {}
};

// Iterative method stopped at its budget; carries the best gap reached.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, double best_gap)
        : Error(ErrorCode::generic, msg + " (best gap " + std::to_string(best_gap) + ")"),
          best_gap_(best_gap) {}

    [[nodiscard]] double best_gap() const noexcept { return best_gap_; }

private:
    double best_gap_;
};

// A selection could not be certified to lie in its target set.
class MembershipError : public Error {
public:
    MembershipError(const std::string& msg, double residual)
        : Error(ErrorCode::generic, msg + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    [[nodiscard]] double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace sdi
