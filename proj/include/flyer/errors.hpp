#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace flyer {

/// Base for all simulator errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Out-of-domain physical or numerical parameter.
struct ParameterError : Error {
  using Error::Error;
};

/// Geometry outside the grid (wing node, probe point, body exit without flag).
struct GeometryError : Error {
  using Error::Error;
};

/// CFL or other step-size violation; retry with a smaller dt.
struct TimeStepError : Error {
  using Error::Error;
};

/// Linear-solver failure; carries the last residual and iteration count.
struct SolverError : Error {
  SolverError(const std::string& what, double residual_, int iterations_)
      : Error(what), residual(residual_), iterations(iterations_) {}
  double residual = 0.0;
  int iterations = 0;
};

/// Partitioned-coupling failure; carries the residual history.
struct CouplingError : Error {
  CouplingError(const std::string& what, std::vector<double> history_)
      : Error(what), history(std::move(history_)) {}
  std::vector<double> history;
};

/// Structural integration blow-up; instructs sub-stepping.
struct StabilityError : Error {
  using Error::Error;
};

/// Configuration file problem, anchored to a line.
struct ConfigError : Error {
  ConfigError(const std::string& what, std::string file_, int line_)
      : Error(file_ + ":" + std::to_string(line_) + ": " + what),
        file(std::move(file_)),
        line(line_) {}
  explicit ConfigError(const std::string& what) : Error(what) {}
  std::string file;
  int line = 0;
};

/// Non-finite gradient or other learning breakdown; the message carries
/// which layer and how large.
struct TrainingError : Error {
  using Error::Error;
};

/// Checkpoint / CSV / filesystem problem.
struct IoError : Error {
  using Error::Error;
};

}  // namespace flyer
