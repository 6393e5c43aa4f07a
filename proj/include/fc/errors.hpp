#pragma once

#include <stdexcept>
#include <string>

namespace fc {

// Base error. exit_code() is what the CLI returns for it.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "error"; }
  virtual int exit_code() const noexcept { return 4; }
};

class DomainError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "domain"; }
  int exit_code() const noexcept override { return 3; }
};

// v at 0 or 1 where the conditioning argument must be interior.
class BoundaryError : public DomainError {
 public:
  using DomainError::DomainError;
  const char* kind() const noexcept override { return "boundary"; }
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "unsupported"; }
  int exit_code() const noexcept override { return 3; }
};

class ContractError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "contract"; }
  int exit_code() const noexcept override { return 3; }
};

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, int line, int column)
      : Error("line " + std::to_string(line) + ", column " +
              std::to_string(column) + ": " + msg),
        line_(line),
        column_(column) {}
  const char* kind() const noexcept override { return "parse"; }
  int exit_code() const noexcept override { return 3; }
  int line() const noexcept { return line_; }
  int column() const noexcept { return column_; }

 private:
  int line_;
  int column_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& msg, double residual)
      : Error(msg + " (residual " + std::to_string(residual) + ")"),
        residual_(residual) {}
  const char* kind() const noexcept override { return "convergence"; }
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

class NumericError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numeric"; }
};

class IntegrationError : public NumericError {
 public:
  IntegrationError(const std::string& msg, double estimate, double error)
      : NumericError(msg), estimate_(estimate), error_(error) {}
  double estimate() const noexcept { return estimate_; }
  double error() const noexcept { return error_; }

 private:
  double estimate_;
  double error_;
};

}  // namespace fc
