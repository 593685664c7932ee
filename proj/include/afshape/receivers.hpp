#pragma once

#include <vector>

#include "afshape/constellation.hpp"
#include "afshape/dsp.hpp"
#include "afshape/scene.hpp"
#include "afshape/waveform.hpp"

namespace afs {

enum class ReceiverKind { MF, RF };
enum class Observer { Alice, Eve };

const char* to_string(ReceiverKind k);
const char* to_string(Observer o);

/// Fast-time range profile (unitary IDFT of a filtered spectrum).
struct RangeProfile {
  CVector bins;
  RVector range_axis_m;
  ReceiverKind receiver = ReceiverKind::MF;
  Observer who = Observer::Alice;

  int n() const { return static_cast<int>(bins.size()); }
};

/// Range-Doppler map, `cells` is N range bins x M_sym Doppler bins. Doppler
/// column 0 is zero Doppler and equals the coherent sum of per-symbol profiles.
struct RangeDopplerMap {
  CMatrix cells;
  RVector range_axis_m;
  RVector doppler_axis_hz;
  ReceiverKind receiver = ReceiverKind::MF;
  Observer who = Observer::Alice;

  CVector zero_doppler() const { return cells.col(0); }
};

struct SnrReport {
  double gamma_mf_db = 0.0;
  double gamma_rf_db = 0.0;
  double loss_db = 0.0;
};

// Frequency-domain filters; one row per OFDM symbol.

/// y .* conj(x).
CMatrix alice_mf_spectrum(const CMatrix& snapshot, const CMatrix& transmit);
/// y ./ x.
CMatrix alice_rf_spectrum(const CMatrix& snapshot, const CMatrix& transmit);
/// y_s .* conj(y_r); uses nothing but Eve's own two channels.
CMatrix eve_mf_spectrum(const CMatrix& surveillance, const CMatrix& reference);
/// y_s ./ y_r.
CMatrix eve_rf_spectrum(const CMatrix& surveillance, const CMatrix& reference);

RVector range_axis(const OfdmGrid& grid);

/// Per-symbol range profiles from a filtered spectrum block.
std::vector<RangeProfile> range_profiles(const CMatrix& filtered, const OfdmGrid& grid,
                                         ReceiverKind kind, Observer who);

std::vector<RangeProfile> alice_mf(const CMatrix& snapshot, const PowerAllocation& alloc,
                                   const SymbolBlock& symbols, const OfdmGrid& grid);
std::vector<RangeProfile> alice_rf(const CMatrix& snapshot, const PowerAllocation& alloc,
                                   const SymbolBlock& symbols, const OfdmGrid& grid);
std::vector<RangeProfile> eve_mf(const CMatrix& surveillance, const CMatrix& reference,
                                 const OfdmGrid& grid);
std::vector<RangeProfile> eve_rf(const CMatrix& surveillance, const CMatrix& reference,
                                 const OfdmGrid& grid);

/// Coherent slow-time sum of the per-symbol profiles (the zero-Doppler cut).
/// Equivalent to one unitary IDFT of the column sums of `filtered`.
RangeProfile integrated_profile(const CMatrix& filtered, const OfdmGrid& grid, ReceiverKind kind,
                                Observer who);

/// Per-symbol unitary IDFT, then an un-normalized DFT across slow time.
RangeDopplerMap rd_map(const CMatrix& filtered, const OfdmGrid& grid, ReceiverKind kind,
                       Observer who);

/// Reciprocal-filter SNR loss (nu_m2 / N) sum_n |w_n|^-2, linear.
double snr_loss_closed_form(const PowerAllocation& alloc, const Constellation& c);

/// Bins usable for noise-power estimation: everything except the mainlobe of
/// each target +/-1 and the comb replicas (spacing N/kappa) of each target +/-1.
std::vector<bool> noise_bin_mask(int n, const std::vector<int>& target_bins, int kappa);

/// Monte-Carlo output-SNR estimator: |E Gamma[n_t]|^2 / E|Gamma_noise[n]|^2.
///
/// Signal comes from the mean complex response at the target bin over all
/// profiles added. Noise power comes either from the masked bins of the same
/// profiles or, when a separately filtered noise-only profile is supplied,
/// from that profile (linear receivers split exactly into the two parts).
class OutputSnrEstimator {
 public:
  OutputSnrEstimator(int target_bin, std::vector<bool> noise_mask);

  void add(const CVector& profile);
  void add(const CVector& profile, const CVector& noise_only);

  double signal_power() const;
  double noise_power() const;
  double snr() const { return signal_power() / noise_power(); }
  long count() const { return count_; }

 private:
  int target_bin_;
  std::vector<bool> mask_;
  dsp::CompensatedSum sig_re_, sig_im_, noise_;
  long count_ = 0;
  long noise_cells_ = 0;

  void accumulate_noise(const CVector& v);
};

/// Empirical SNR report from two estimators on identical scenes and noise.
SnrReport make_snr_report(double gamma_mf, double gamma_rf);

}  // namespace afs
