#pragma once

#include <cstdint>
#include <optional>

#include "afshape/types.hpp"

namespace afs {

/// Smallest admissible per-subcarrier power. A zero entry would make the
/// reciprocal filter divide by zero.
inline constexpr double kDefaultPowerFloor = 1e-4;

/// Target comb shape of a secure ACF: a mainlobe N at lag 0 plus `num_peaks`
/// artificial peaks of height alpha_frac * N spaced N / kappa apart.
struct SecureAcfSpec {
  double alpha_frac = 0.0;  ///< artificial peak height relative to the mainlobe
  int num_peaks = 1;        ///< L

  int kappa() const { return num_peaks + 1; }
  double p() const { return 1.0 + alpha_frac * num_peaks; }
  double q() const { return 1.0 - alpha_frac; }
  int lambda_bins(int n) const { return n / kappa(); }

  /// Inverse parameterization from the comb spacing and complement power.
  static SecureAcfSpec from_kappa_q(int kappa, double q);
};

/// (p, q, kappa, n0) metadata of a comb-structured allocation. `jitter` is the
/// per-entry standard deviation for stochastic allocations, zero otherwise.
struct AllocationStructure {
  double p = 1.0;
  double q = 1.0;
  int kappa = 1;
  int n0 = 1;  ///< 1-based first dominant subcarrier, 1 <= n0 <= kappa
  double jitter = 0.0;
};

/// Per-subcarrier transmit powers |w_n|^2. Sums to N; every entry >= floor.
struct PowerAllocation {
  RVector power;
  std::optional<AllocationStructure> structure;

  int n() const { return static_cast<int>(power.size()); }
  /// Amplitudes w_n (zero phase).
  RVector amplitudes() const { return power.cwiseSqrt(); }
};

/// All-ones allocation.
PowerAllocation equal_allocation(int n);

/// Throws FloorError / ConfigError if `power` violates the allocation invariants.
void validate_allocation(const PowerAllocation& alloc, double floor = kDefaultPowerFloor);

/// Whether 0-based subcarrier `index` belongs to the dominant set {n0, n0+kappa, ...}.
inline bool in_dominant_set(int index, int kappa, int n0) {
  return ((index - (n0 - 1)) % kappa + kappa) % kappa == 0;
}

/// Comb allocation: p on the dominant set starting at n0, q elsewhere.
PowerAllocation structured_allocation(const SecureAcfSpec& spec, int n, int n0 = 1,
                                      double floor = kDefaultPowerFloor);

/// Comb allocation with Gaussian jitter of standard deviation `jitter` on every
/// entry, rescaled afterwards so the total is exactly N.
PowerAllocation stochastic_allocation(const SecureAcfSpec& spec, int n, int n0, double jitter,
                                      std::uint64_t seed, double floor = kDefaultPowerFloor);

/// The ideal secure ACF (a real comb) for `spec` at length n.
RVector secure_comb(const SecureAcfSpec& spec, int n);

/// Recovers subcarrier powers from an ideal ACF via |w_n|^2 = (1/N) sum_k acf[k] e^{-j2pi k n/N}.
/// Tags the result with (p, q, kappa, n0 = 1) when the powers form a comb.
PowerAllocation ideal_acf_to_allocation(const RVector& acf, double floor = kDefaultPowerFloor);

}  // namespace afs
