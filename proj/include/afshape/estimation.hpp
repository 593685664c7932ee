#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include "afshape/rng.hpp"
#include "afshape/sensing_sim.hpp"

namespace afs {

enum class RootingMethod {
  Companion,  // eigenvalues of the companion matrix; exact, O(L^3)
  Newton,     // pseudo-spectrum minima polished by Newton; falls back to Companion
};

struct MusicConfig {
  int num_sources = 2;
  int subarray_len = 0;  // 0 selects N/2
  bool forward_backward = true;
  /// Average the per-symbol channel estimates before forming the covariance.
  /// When false every symbol contributes its own smoothed snapshots.
  bool average_symbols = true;
  RootingMethod rooting = RootingMethod::Newton;

  int resolved_subarray(int n) const { return subarray_len > 0 ? subarray_len : n / 2; }
};

/// Spatially smoothed covariance of subcarrier subarrays, L x L.
CMatrix smoothed_covariance(const CMatrix& channel_estimates, const MusicConfig& cfg);

/// Coefficients c_k, k = -(L-1)..L-1 (stored at index k + L - 1), of
/// a(z)^H P_noise a(z) with a(z) = [1, z, ..., z^(L-1)].
CVector noise_polynomial(const CMatrix& covariance, int num_sources);

/// The `count` roots strictly inside the unit circle that lie nearest to it.
std::vector<cd> roots_near_unit_circle(const CVector& coeffs, int count, RootingMethod method);

/// Sorted ranges (metres, in [0, R_max)) of `num_sources` reflectors from
/// per-symbol channel estimates [M_sym x N] under steering exp(-j 2 pi n df tau).
/// Throws EstimationError when the covariance is rank deficient.
std::vector<double> root_music_ranges(const CMatrix& channel_estimates, const MusicConfig& cfg,
                                      const OfdmGrid& grid);

/// Optimal one-to-one assignment of estimates to truths under circular
/// distance on [0, period). Truths left without an estimate contribute
/// `period / 2`. Returns per-truth absolute errors.
std::vector<double> assignment_errors(const std::vector<double>& estimates,
                                      const std::vector<double>& truths, double period);

struct SampledScene {
  RadarScene scene;
  std::vector<double> true_ranges_m;
};

/// Draws a scene for one trial; `noise_var` scales reflector amplitudes.
using SceneSampler = std::function<SampledScene(Rng& rng, double noise_var)>;

/// Two reflectors at independent uniform ranges in [min_range_m, max_range_m]
/// at least `min_separation_m` apart. The stronger one has input SNR
/// `strong_snr` (linear); the weaker sits a log-uniform ratio in
/// [gap_low, gap_high] (linear power ratios) below it.
SceneSampler two_target_sampler(const OfdmGrid& grid, double strong_snr, double gap_low,
                                double gap_high, double min_range_m = 10.0,
                                double max_range_m = 180.0, double min_separation_m = 15.0);

struct RmseReport {
  double rmse_alice_m = 0.0;
  double rmse_eve_m = 0.0;
  double gap_m = 0.0;
  double ci_alice_m = 0.0;  // 95% half-widths (delta method)
  double ci_eve_m = 0.0;
  double ci_gap_m = 0.0;
  /// Fraction of trials where some Eve estimate sits within one bin of a
  /// comb replica (offset j R_max / kappa, j != 0) of a true target.
  double eve_replica_lock_fraction = 0.0;
  long trials = 0;
};

struct RmseScenario {
  SensingSetup setup;
  SceneSampler sampler;
  MusicConfig music;
  ReceiverKind alice_receiver = ReceiverKind::RF;
  ReceiverKind eve_receiver = ReceiverKind::MF;
};

/// Alice and Eve see the same scene and transmission in each trial.
RmseReport rmse_experiment(const RmseScenario& scenario, int trials, std::uint64_t seed,
                           int threads = 0);

}  // namespace afs
