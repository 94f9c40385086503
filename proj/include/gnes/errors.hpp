#pragma once

#include <stdexcept>
#include <string>

namespace gnes {

// Base class for everything this library throws.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// graph construction / validation
struct EmptyGraph : Error {
  using Error::Error;
};
struct DisconnectedGraph : Error {
  using Error::Error;
};
struct NotSubgraph : Error {
  using Error::Error;
};
struct MissingTriangleCover : Error {
  MissingTriangleCover(int u, int v, const std::string& what) : Error(what), u(u), v(v) {}
  int u, v;  // pruned interference edge with no covering triangle
};

// game evaluation
struct OutOfDomain : Error {
  using Error::Error;
};
struct SingularCost : Error {
  using Error::Error;
};
struct MonotonicityViolation : Error {
  using Error::Error;
};

// stacked-index space
struct NotANeighbor : Error {
  using Error::Error;
};
struct NotCommNeighbors : Error {
  using Error::Error;
};
struct BadDistribution : Error {
  using Error::Error;
};

// engine / solvers
struct InfeasibleInit : Error {
  using Error::Error;
};
struct NoConvergence : Error {
  NoConvergence(long iters, const std::string& what) : Error(what), iterations(iters) {}
  long iterations;
};
struct CycleDetected : Error {
  CycleDetected(long period, const std::string& what) : Error(what), period(period) {}
  long period;
};
struct TargetNotReached : Error {
  using Error::Error;
};

// CLI / config
struct ConfigError : Error {
  using Error::Error;
};
struct ValidationError : Error {
  using Error::Error;
};

}  // namespace gnes
