#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "afshape/receivers.hpp"
#include "afshape/sensing_sim.hpp"

namespace afs {

struct CfarConfig {
  int train_cells = 16;  // per side
  int guard_cells = 4;   // per side
  double pfa = 1e-5;

  int total_training() const { return 2 * train_cells; }
  /// T = N_t (pfa^(-1/N_t) - 1): exact for exponentially distributed cell powers.
  double threshold_factor() const;
};

struct DetectionResult {
  std::vector<int> detected_bins;
  RVector threshold_profile;
};

/// Circular cell-averaging CFAR. Cell k is detected iff
/// power[k] > T * mean(training cells around k).
DetectionResult ca_cfar(std::span<const double> cell_power, const CfarConfig& cfg);
DetectionResult ca_cfar(const RangeProfile& profile, const CfarConfig& cfg);

struct PointScatterer {
  double range_m = 0.0;
  double snr = 1.0;  // linear, |beta|^2 / noise variance
};

/// One detection experiment: a fixed waveform and receiver, clutter held
/// constant, target SNR swept. Reflector phases are redrawn every trial.
struct PdScenario {
  SensingSetup setup;
  std::vector<PointScatterer> clutter;
  double target_range_m = 100.0;
  ReceiverChoice rx;
  std::string waveform_id = "plain";
  int credit_bins = 1;  // detection counted within +/- this many bins of truth
};

struct PdPoint {
  double snr_db = 0.0;
  double pd = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  long detections = 0;
  long trials = 0;
};

struct WilsonInterval {
  double low;
  double high;
};

/// Wilson score interval for k successes in n trials at normal quantile z.
WilsonInterval wilson_interval(long k, long n, double z = 1.959963984540054);

/// Runs the scenario at every SNR. Trial t uses the same frame seed at every
/// SNR point (common random numbers), so curves are monotone up to noise in
/// the CFAR reference cells only.
std::vector<PdPoint> pd_curve(const PdScenario& scenario, const CfarConfig& cfg,
                              std::span<const double> snr_grid_db, int trials, std::uint64_t seed,
                              int threads = 0);

/// Smallest SNR at which the curve reaches `pd`, linearly interpolated in dB
/// between the bracketing grid points. NaN if the curve never reaches it.
double snr_at_pd(const std::vector<PdPoint>& curve, double pd);

void write_pd_csv(std::ostream& os, const std::vector<PdPoint>& curve, const std::string& receiver,
                  const std::string& waveform_id, bool header = true);

}  // namespace afs
