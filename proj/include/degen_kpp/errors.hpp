#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace degen_kpp {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition on an argument failed.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The adaptive stepper could not continue; carries the last accepted state.
class IntegrationError : public Error {
public:
    IntegrationError(const std::string& what, double r, double h)
        : Error(what), last_r(r), last_h(h) {}
    double last_r;
    double last_h;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> history = {})
        : Error(what), history(std::move(history)) {}
    std::vector<double> history;
};

/// A bisection bracket did not straddle the predicate.
class SearchError : public Error {
public:
    using Error::Error;
};

class EstimationError : public Error {
public:
    EstimationError(const std::string& what, std::vector<double> residuals = {})
        : Error(what), residuals(std::move(residuals)) {}
    std::vector<double> residuals;
};

/// Two computations that must agree did not.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

class CertificateFailure : public Error {
public:
    CertificateFailure(const std::string& what, double witness_r, double margin)
        : Error(what), witness_r(witness_r), margin(margin) {}
    double witness_r;
    double margin;
};

}  // namespace degen_kpp
