#pragma once
#include <stdexcept>
#include <string>

namespace swimrl {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Configuration / input problems (exit code 1 at the CLI).
struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct ShapeMismatch : Error {
  using Error::Error;
};

// t == t0: no window to average the stretching over.
struct DegenerateWindow : Error {
  using Error::Error;
};

struct InsufficientSamples : Error {
  using Error::Error;
};

// phi <= d(d-1)D/2: the stationary normalization integral diverges.
struct UnboundedDistribution : Error {
  using Error::Error;
};

// 2*phi <= D_tilde: separation statistics never stabilize.
struct UnstableRegime : Error {
  using Error::Error;
};

// phi <= lambda_bar: no stationary separation state exists.
struct NoStationaryState : Error {
  using Error::Error;
};

}  // namespace swimrl
