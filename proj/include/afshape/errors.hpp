#pragma once

#include <stdexcept>
#include <string>

namespace afs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unknown constellation or experiment identifier.
class NameError : public Error {
 public:
  using Error::Error;
};

/// Comb spacing does not divide the subcarrier count.
class DivisibilityError : public Error {
 public:
  using Error::Error;
};

/// A subcarrier power would fall below the allocation floor.
class FloorError : public Error {
 public:
  using Error::Error;
};

/// The DFT of a requested ACF yields a negative subcarrier power.
class InfeasibleAcfError : public Error {
 public:
  using Error::Error;
};

/// A closed form was requested for an allocation without (p, q, kappa) metadata.
class StructureError : public Error {
 public:
  using Error::Error;
};

class LengthError : public Error {
 public:
  using Error::Error;
};

/// Reflector delay exceeds the cyclic-prefix protected region.
class IsiRegionError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration: window sizes, schema violations, bad overrides.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class EstimationError : public Error {
 public:
  using Error::Error;
};

/// Requested security levels cannot be met by any admissible allocation.
class InfeasibleSecurityError : public Error {
 public:
  using Error::Error;
};

/// The convex solver stopped without meeting its convergence test.
class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace afs
