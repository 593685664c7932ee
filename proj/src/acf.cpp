#include "afshape/acf.hpp"

#include <cmath>
#include <ostream>
#include <vector>

#include "afshape/csv.hpp"
#include "afshape/dsp.hpp"
#include "afshape/errors.hpp"
#include "afshape/rng.hpp"

namespace afs {

SecurityMetrics SecurityMetrics::from_linear(double psl, double isl) {
  return {psl, isl, linear_to_db(psl), linear_to_db(isl)};
}

AcfProfile empirical_acf(const PowerAllocation& alloc, const CVector& symbols) {
  if (symbols.size() != alloc.power.size()) {
    throw LengthError("symbol row length does not match the allocation");
  }
  const CVector weighted = (alloc.power.array() * symbols.array().abs2()).matrix().cast<cd>();
  AcfProfile out;
  out.values = dsp::idft_sum(weighted);
  out.squared = out.values.array().abs2();
  return out;
}

AcfProfile expected_sq_acf(const PowerAllocation& alloc, const Constellation& c) {
  if (!alloc.structure) {
    throw StructureError("closed-form expectation needs a (p, q, kappa) allocation; "
                         "use monte_carlo_sq_acf or expected_sq_acf_exact");
  }
  const AllocationStructure& s = *alloc.structure;
  const int n = alloc.n();
  if (s.kappa < 1 || n % s.kappa != 0) throw DivisibilityError("kappa does not divide N");
  const double nd = n;
  const double alpha = nd * (1.0 - s.q);
  const int lambda = n / s.kappa;
  const double floor_term =
      (c.mu4 - 1.0) * (nd * s.p * s.p / s.kappa + nd * (1.0 - 1.0 / s.kappa) * s.q * s.q) +
      c.mu4 * nd * s.jitter * s.jitter;

  AcfProfile out;
  out.is_expectation = true;
  out.values = CVector::Zero(n);
  out.squared = RVector::Constant(n, floor_term);
  out.values[0] = nd;
  out.squared[0] += nd * nd;
  if (s.kappa > 1) {
    for (int l = 1; l < s.kappa; ++l) {
      const int k = l * lambda;
      // Shifting the dominant set by n0 multiplies the comb by a linear phase.
      const double phase = 2.0 * kPi * k * (s.n0 - 1) / nd;
      out.values[k] = alpha * cd(std::cos(phase), std::sin(phase));
      out.squared[k] += alpha * alpha;
    }
  }
  return out;
}

AcfProfile expected_sq_acf_exact(const PowerAllocation& alloc, const Constellation& c) {
  const int n = alloc.n();
  std::vector<double> a4(n);
  for (int i = 0; i < n; ++i) a4[i] = alloc.power[i] * alloc.power[i];
  const double floor_term = (c.mu4 - 1.0) * dsp::compensated_sum(a4);
  AcfProfile out;
  out.is_expectation = true;
  out.values = dsp::idft_sum(alloc.power.cast<cd>());
  out.squared = out.values.array().abs2() + floor_term;
  return out;
}

AcfProfile monte_carlo_sq_acf(const PowerAllocation& alloc, const Constellation& c, int trials,
                              std::uint64_t seed) {
  if (trials < 1) throw ConfigError("monte_carlo_sq_acf needs at least one trial");
  const int n = alloc.n();
  std::vector<dsp::CompensatedSum> sum(n), sum_sq(n);
  std::vector<dsp::CompensatedSum> re(n), im(n);
  for (int t = 0; t < trials; ++t) {
    const SymbolBlock block = draw_symbols(c, 1, n, derive_seed(seed, t));
    const AcfProfile one = empirical_acf(alloc, block.symbols.row(0).transpose());
    for (int k = 0; k < n; ++k) {
      sum[k].add(one.squared[k]);
      sum_sq[k].add(one.squared[k] * one.squared[k]);
      re[k].add(one.values[k].real());
      im[k].add(one.values[k].imag());
    }
  }
  AcfProfile out;
  out.is_expectation = true;
  out.values.resize(n);
  out.squared.resize(n);
  out.std_error.resize(n);
  const double t = trials;
  for (int k = 0; k < n; ++k) {
    const double mean = sum[k].value() / t;
    out.squared[k] = mean;
    out.values[k] = cd(re[k].value() / t, im[k].value() / t);
    if (trials > 1) {
      const double var = std::max(0.0, (sum_sq[k].value() - t * mean * mean) / (t - 1.0));
      out.std_error[k] = std::sqrt(var / t);
    } else {
      out.std_error[k] = 0.0;
    }
  }
  return out;
}

double psl(const AcfProfile& profile) {
  double peak = 0.0;
  for (int k = 1; k < profile.n(); ++k) peak = std::max(peak, profile.squared[k]);
  return peak / profile.squared[0];
}

double isl(const AcfProfile& profile) {
  std::vector<double> side(profile.squared.data() + 1,
                           profile.squared.data() + profile.squared.size());
  return dsp::compensated_sum(side) / profile.squared[0];
}

SecurityMetrics metrics_closed_form(const AllocationStructure& s, const Constellation& c) {
  if (s.kappa <= 1) return SecurityMetrics::from_linear(0.0, c.mu4 - 1.0);
  const double d = 1.0 - s.q;
  const double k = s.kappa;
  const double psl_lin = d * d;
  const double isl_lin =
      (k - 1.0) * d * d + (c.mu4 - 1.0) * (s.p * s.p / k + (1.0 - 1.0 / k) * s.q * s.q);
  return SecurityMetrics::from_linear(psl_lin, isl_lin);
}

SecurityMetrics metrics_closed_form(const SecureAcfSpec& spec, const Constellation& c) {
  return metrics_closed_form(AllocationStructure{spec.p(), spec.q(), spec.kappa(), 1, 0.0}, c);
}

SecurityMetrics metrics_from_profile(const AcfProfile& profile) {
  return SecurityMetrics::from_linear(psl(profile), isl(profile));
}

void write_acf_csv(std::ostream& os, const AcfProfile& profile, double bin_range_m) {
  CsvWriter csv(os, {"k", "range_m", "value_re", "value_im", "squared"});
  for (int k = 0; k < profile.n(); ++k) {
    csv.row(k, k * bin_range_m, profile.values[k].real(), profile.values[k].imag(),
            profile.squared[k]);
  }
}

}  // namespace afs
