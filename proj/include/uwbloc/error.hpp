#ifndef UWBLOC_ERROR_HPP_
#define UWBLOC_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace uwbloc {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user configuration (bad anchor set, unknown key, out-of-range value).
/// `line` is 1-based when the problem can be pinned to a config file line, 0 otherwise.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what, int line = 0) : Error(what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

class MalformedFrame : public Error {
 public:
  explicit MalformedFrame(const std::string& detail) : Error("malformed frame: " + detail) {}
};

class DegenerateExchange : public Error {
 public:
  DegenerateExchange() : Error("degenerate exchange") {}
};

class ContractViolation : public Error {
 public:
  using Error::Error;
};

class IllConditioned : public Error {
 public:
  explicit IllConditioned(const std::string& detail) : Error("ill-conditioned: " + detail) {}
};

class NotConverged : public Error {
 public:
  explicit NotConverged(double residual)
      : Error("trilateration did not converge (residual " + std::to_string(residual) + " m)"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace uwbloc

#endif  // UWBLOC_ERROR_HPP_
