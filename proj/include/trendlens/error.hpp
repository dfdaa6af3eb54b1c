#pragma once

#include <stdexcept>
#include <string>

namespace trendlens {

// Each error family maps onto one CLI exit code.
enum class ExitCode : int {
    Ok = 0,
    Config = 2,
    Data = 3,
    Numerical = 4,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

/// Bad configuration: missing files, schema columns, invalid parameters.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ExitCode::Config, what) {}
};

/// Input data that cannot be analysed (too short, ambiguous dates, ...).
class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(ExitCode::Data, what) {}
};

/// A numerical routine failed to produce a usable answer.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ExitCode::Numerical, what) {}
};

}  // namespace trendlens
