#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace almlab {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

class MeshError : public Error {
public:
  using Error::Error;
};

class SingularMatrixError : public Error {
public:
  SingularMatrixError(const std::string& what, long pivot)
      : Error(what), pivot_(pivot) {}
  long pivot() const { return pivot_; }

private:
  long pivot_;
};

class NonConvergenceError : public Error {
public:
  NonConvergenceError(const std::string& what, std::vector<double> history)
      : Error(what), history_(std::move(history)) {}
  const std::vector<double>& history() const { return history_; }

private:
  std::vector<double> history_;
};

}  // namespace almlab
