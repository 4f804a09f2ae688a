#pragma once

#include <stdexcept>
#include <string>

namespace crosslight {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PreconditionError : public Error {
public:
    using Error::Error;
};

// Invalid configuration; mapped to exit code 2 by the CLI.
class ConfigError : public Error {
public:
    enum class Kind { missing_file, syntax, unknown_key, invalid };
    ConfigError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    explicit ConfigError(const std::string& what) : ConfigError(Kind::invalid, what) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

class CycleBudgetError : public ConfigError {
public:
    explicit CycleBudgetError(const std::string& what) : ConfigError(Kind::invalid, what) {}
};

// Non-finite intermediate value; mapped to exit code 3.
class NumericFault : public Error {
public:
    NumericFault(std::string quantity, const std::string& what)
        : Error(what), quantity_(std::move(quantity)) {}
    const std::string& quantity() const noexcept { return quantity_; }

private:
    std::string quantity_;
};

class NotHurwitz : public Error {
public:
    using Error::Error;
};

class DegenerateData : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class StateError : public Error {
public:
    using Error::Error;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

// Module failure inside the scenario loop, with the step and a JSON snapshot of the plant.
class ScenarioError : public Error {
public:
    ScenarioError(const std::string& what, long long step, std::string snapshot, bool numeric)
        : Error(what), step_(step), snapshot_(std::move(snapshot)), numeric_(numeric) {}
    long long step() const noexcept { return step_; }
    const std::string& snapshot() const noexcept { return snapshot_; }
    bool numeric() const noexcept { return numeric_; }

private:
    long long step_;
    std::string snapshot_;
    bool numeric_;
};

}  // namespace crosslight
