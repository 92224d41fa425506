#pragma once

#include <stdexcept>
#include <string>

namespace parareal {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Denominator of a rational function vanished at the evaluation point.
class PoleError : public Error {
public:
    using Error::Error;
};

/// A characteristic root left the open unit disc.
class UnstableScheme : public Error {
public:
    using Error::Error;
};

class UnknownScheme : public Error {
public:
    explicit UnknownScheme(const std::string& name) : Error("unknown scheme: " + name) {}
};

class NotConsistent : public Error {
public:
    using Error::Error;
};

class AllPointsFailed : public Error {
public:
    using Error::Error;
};

/// Optimizer parameters violate |rho_i(s)| < 1 at some sample.
class Infeasible : public Error {
public:
    Infeasible(const std::string& what, double s) : Error(what), sample(s) {}
    double sample;
};

class NoFeasibleInit : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class SingularSystem : public Error {
public:
    using Error::Error;
};

class NewtonDivergence : public Error {
public:
    using Error::Error;
};

class InsufficientTrace : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace parareal
