#include "afshape/waveform.hpp"

#include <cmath>
#include <sstream>

#include "afshape/dsp.hpp"
#include "afshape/errors.hpp"
#include "afshape/rng.hpp"

namespace afs {

namespace {

void check_comb_shape(const SecureAcfSpec& spec, int n, int n0) {
  if (spec.num_peaks < 1) throw ConfigError("secure ACF needs at least one artificial peak");
  if (!(spec.alpha_frac >= 0.0 && spec.alpha_frac < 1.0)) {
    throw ConfigError("alpha/N must lie in [0, 1)");
  }
  if (n < 1 || n % spec.kappa() != 0) {
    std::ostringstream os;
    os << "kappa = " << spec.kappa() << " does not divide N = " << n;
    throw DivisibilityError(os.str());
  }
  if (n0 < 1 || n0 > spec.kappa()) {
    throw ConfigError("n0 must satisfy 1 <= n0 <= kappa");
  }
}

double total_power(const RVector& power) {
  return dsp::compensated_sum({power.data(), static_cast<std::size_t>(power.size())});
}

}  // namespace

SecureAcfSpec SecureAcfSpec::from_kappa_q(int kappa, double q) {
  if (kappa < 2) throw ConfigError("comb spacing kappa must be >= 2");
  return SecureAcfSpec{1.0 - q, kappa - 1};
}

PowerAllocation equal_allocation(int n) {
  PowerAllocation a;
  a.power = RVector::Ones(n);
  return a;
}

void validate_allocation(const PowerAllocation& alloc, double floor) {
  const int n = alloc.n();
  if (n < 1) throw ConfigError("allocation is empty");
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(alloc.power[i]) || alloc.power[i] < floor) {
      std::ostringstream os;
      os << "subcarrier " << i << " power " << alloc.power[i] << " below floor " << floor;
      throw FloorError(os.str());
    }
  }
  const double total = total_power(alloc.power);
  if (std::abs(total - n) > 1e-9 * std::max(1.0, static_cast<double>(n))) {
    std::ostringstream os;
    os.precision(17);
    os << "allocation sums to " << total << ", expected " << n;
    throw ConfigError(os.str());
  }
}

PowerAllocation structured_allocation(const SecureAcfSpec& spec, int n, int n0, double floor) {
  check_comb_shape(spec, n, n0);
  const double p = spec.p();
  double q = spec.q();
  // q = 1 - (1 - floor) lands a few ulps under the floor; treat that as the floor.
  if (q < floor && q > floor * (1.0 - 1e-9)) q = floor;
  if (q < floor) {
    std::ostringstream os;
    os << "complement power q = " << q << " below floor " << floor;
    throw FloorError(os.str());
  }
  PowerAllocation a;
  a.power.resize(n);
  for (int i = 0; i < n; ++i) a.power[i] = in_dominant_set(i, spec.kappa(), n0) ? p : q;
  a.structure = AllocationStructure{p, q, spec.kappa(), n0, 0.0};
  return a;
}

PowerAllocation stochastic_allocation(const SecureAcfSpec& spec, int n, int n0, double jitter,
                                      std::uint64_t seed, double floor) {
  if (jitter < 0.0) throw ConfigError("jitter must be non-negative");
  PowerAllocation a = structured_allocation(spec, n, n0, floor);
  if (jitter == 0.0) return a;

  Rng rng(seed);
  for (int i = 0; i < n; ++i) a.power[i] += jitter * rng.normal();
  const double scale = n / total_power(a.power);
  a.power *= scale;
  for (int i = 0; i < n; ++i) {
    if (a.power[i] < floor) {
      std::ostringstream os;
      os << "jitter " << jitter << " pushed subcarrier " << i << " below floor " << floor;
      throw FloorError(os.str());
    }
  }
  a.structure->jitter = jitter;
  return a;
}

RVector secure_comb(const SecureAcfSpec& spec, int n) {
  check_comb_shape(spec, n, 1);
  RVector acf = RVector::Zero(n);
  acf[0] = n;
  const int lambda = spec.lambda_bins(n);
  for (int l = 1; l <= spec.num_peaks; ++l) acf[l * lambda] = spec.alpha_frac * n;
  return acf;
}

PowerAllocation ideal_acf_to_allocation(const RVector& acf, double floor) {
  const int n = static_cast<int>(acf.size());
  if (n < 1) throw LengthError("empty ACF");
  const CVector spectrum = dsp::dft(acf.cast<cd>());
  PowerAllocation a;
  a.power.resize(n);
  for (int i = 0; i < n; ++i) {
    const double v = spectrum[i].real() / n;
    if (v <= 0.0) {
      std::ostringstream os;
      os << "ACF implies non-positive power " << v << " on subcarrier " << i;
      throw InfeasibleAcfError(os.str());
    }
    if (v < floor) {
      std::ostringstream os;
      os << "ACF implies power " << v << " below floor on subcarrier " << i;
      throw FloorError(os.str());
    }
    a.power[i] = v;
  }

  // Detect the comb structure: p on {0, kappa, 2 kappa, ...}, q elsewhere.
  constexpr double tol = 1e-9;
  const double p = a.power[0];
  int kappa = 1;
  while (kappa < n && std::abs(a.power[kappa] - p) > tol) ++kappa;
  if (kappa == 1) {
    bool flat = true;
    for (int i = 0; i < n; ++i) flat = flat && std::abs(a.power[i] - p) <= tol;
    if (flat) a.structure = AllocationStructure{p, p, 1, 1, 0.0};
    return a;
  }
  if (kappa == n || n % kappa != 0) return a;
  const double q = a.power[1];
  bool comb = p > q;
  for (int i = 0; i < n && comb; ++i) {
    const double expected = (i % kappa == 0) ? p : q;
    comb = std::abs(a.power[i] - expected) <= tol;
  }
  if (comb) a.structure = AllocationStructure{p, q, kappa, 1, 0.0};
  return a;
}

}  // namespace afs
