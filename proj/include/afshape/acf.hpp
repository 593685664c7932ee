#pragma once

#include <cstdint>
#include <iosfwd>

#include "afshape/constellation.hpp"
#include "afshape/waveform.hpp"

namespace afs {

/// Zero-Doppler cut of the ambiguity function over N lags.
///
/// For a single realization `values` holds Lambda[k] and `squared` its
/// magnitude squared. For expectation profiles `values` holds E[Lambda[k]]
/// and `squared` holds E|Lambda[k]|^2 (not |E Lambda|^2). Monte-Carlo profiles
/// additionally carry the per-lag standard error of `squared`.
struct AcfProfile {
  CVector values;
  RVector squared;
  RVector std_error;
  bool is_expectation = false;

  int n() const { return static_cast<int>(squared.size()); }
};

struct SecurityMetrics {
  double psl_linear = 0.0;
  double isl_linear = 0.0;
  double psl_db = 0.0;
  double isl_db = 0.0;

  static SecurityMetrics from_linear(double psl, double isl);
};

/// Lambda[k] = sum_n |w_n|^2 |s_n|^2 exp(+j 2 pi k n / N) for one OFDM symbol.
AcfProfile empirical_acf(const PowerAllocation& alloc, const CVector& symbols);

/// Closed-form E|Lambda[k]|^2 for a comb-structured allocation:
///   N^2 delta[k] + alpha^2 sum_l delta[k - l lambda] + (mu4 - 1)(N p^2/kappa + N(1 - 1/kappa) q^2)
/// plus mu4 * N * jitter^2 for stochastic allocations.
/// Throws StructureError when the allocation carries no structure tag.
AcfProfile expected_sq_acf(const PowerAllocation& alloc, const Constellation& c);

/// E|Lambda[k]|^2 = (mu4 - 1) sum_n |w_n|^4 + |sum_n |w_n|^2 e^{j 2 pi k n/N}|^2,
/// valid for any deterministic allocation.
AcfProfile expected_sq_acf_exact(const PowerAllocation& alloc, const Constellation& c);

/// Average of |Lambda[k]|^2 over `trials` independent symbol draws.
AcfProfile monte_carlo_sq_acf(const PowerAllocation& alloc, const Constellation& c, int trials,
                              std::uint64_t seed);

/// max_{k != 0} E|Lambda[k]|^2 / E|Lambda[0]|^2.
double psl(const AcfProfile& profile);
/// sum_{k != 0} E|Lambda[k]|^2 / E|Lambda[0]|^2.
double isl(const AcfProfile& profile);

/// PSL = (1 - q)^2 and ISL = (kappa - 1)(1 - q)^2 + (mu4 - 1)(p^2/kappa + (1 - 1/kappa) q^2).
SecurityMetrics metrics_closed_form(const SecureAcfSpec& spec, const Constellation& c);
SecurityMetrics metrics_closed_form(const AllocationStructure& s, const Constellation& c);

/// Metrics of the expectation profile of an arbitrary allocation.
SecurityMetrics metrics_from_profile(const AcfProfile& profile);

/// CSV with columns k, range_m, value_re, value_im, squared.
void write_acf_csv(std::ostream& os, const AcfProfile& profile, double bin_range_m);

}  // namespace afs
