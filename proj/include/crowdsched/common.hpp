#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace crowdsched {

/// Day offset from an epoch (catalog epoch or project day 0).
using Day = int;

template <typename Scalar = double>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar = double>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar = double>
using Objectives = Eigen::Matrix<Scalar, 3, 1>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Missing or malformed column in a delimited input.
class SchemaError : public Error {
public:
    SchemaError(std::string column, const std::string& what)
        : Error(what), column_(std::move(column)) {}
    [[nodiscard]] auto column() const -> const std::string& { return column_; }

private:
    std::string column_;
};

class LookupError : public Error {
public:
    using Error::Error;
};

class CycleError : public Error {
public:
    CycleError(std::vector<std::string> cycle, const std::string& what)
        : Error(what), cycle_(std::move(cycle)) {}
    [[nodiscard]] auto cycle() const -> const std::vector<std::string>& { return cycle_; }

private:
    std::vector<std::string> cycle_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    DivergenceError(std::size_t epoch, const std::string& what) : Error(what), epoch_(epoch) {}
    [[nodiscard]] auto epoch() const -> std::size_t { return epoch_; }

private:
    std::size_t epoch_;
};

/// Model file with an unknown header or inconsistent layout.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Instance too large for exhaustive enumeration.
class GuardError : public Error {
public:
    GuardError(double estimate, const std::string& what) : Error(what), estimate_(estimate) {}
    [[nodiscard]] auto estimate() const -> double { return estimate_; }

private:
    double estimate_;
};

} // namespace crowdsched
