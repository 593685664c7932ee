#pragma once

#include <cstdint>
#include <vector>

#include "afshape/constellation.hpp"
#include "afshape/types.hpp"
#include "afshape/waveform.hpp"

namespace afs {

/// CP-OFDM numerology shared by the transmitter and both sensing receivers.
struct OfdmGrid {
  int n = 256;
  int n_cp = 64;
  double bandwidth_hz = 50e6;
  int m_sym = 32;

  double delta_f_hz() const { return bandwidth_hz / n; }
  /// Maximum unambiguous range c N / (2B).
  double r_max_m() const { return kSpeedOfLight * n / (2.0 * bandwidth_hz); }
  /// Range covered by the cyclic prefix, c N_cp / (2B).
  double r_max_cp_m() const { return kSpeedOfLight * n_cp / (2.0 * bandwidth_hz); }
  /// Range spanned by one IDFT bin, c / (2B).
  double bin_range_m() const { return kSpeedOfLight / (2.0 * bandwidth_hz); }
  /// CP-OFDM symbol repetition interval.
  double symbol_duration_s() const { return (n + n_cp) / bandwidth_hz; }

  double delay_for_range(double range_m) const { return 2.0 * range_m / kSpeedOfLight; }
  double range_for_delay(double delay_s) const { return delay_s * kSpeedOfLight / 2.0; }
  /// Fractional IDFT bin of a monostatic range, 2 R B / c.
  double bin_for_range(double range_m) const { return range_m / bin_range_m(); }
};

enum class ReflectorKind { Target, Clutter };

struct Reflector {
  cd amplitude{1.0, 0.0};
  double delay_s = 0.0;
  ReflectorKind kind = ReflectorKind::Target;
};

/// Reflector at a monostatic range whose per-subcarrier input SNR (linear) is
/// `snr` against noise of variance `noise_var`, i.e. |beta|^2 = snr * noise_var.
Reflector reflector_at_range(const OfdmGrid& grid, double range_m, double snr, double noise_var,
                             ReflectorKind kind = ReflectorKind::Target, double phase_rad = 0.0);

struct RadarScene {
  std::vector<Reflector> reflectors;

  /// Throws IsiRegionError when any delay falls outside the CP-protected region.
  void validate(const OfdmGrid& grid) const;
};

/// r(tau)[n] = exp(-j 2 pi n delta_f tau), n = 0..N-1.
CVector steering(double delay_s, const OfdmGrid& grid);

/// Radar channel sum_i beta_i r(tau_i).
CVector channel_vector(const RadarScene& scene, const OfdmGrid& grid);

/// Frequency-domain transmit symbols x = w .* s, one row per OFDM symbol.
CMatrix transmit_block(const PowerAllocation& alloc, const SymbolBlock& symbols);

/// Circular complex Gaussian block with E|z|^2 = noise_var.
CMatrix noise_block(Eigen::Index rows, Eigen::Index cols, double noise_var, std::uint64_t seed);

/// Echo at a sensing receiver: row m = h .* x_m + z_m.
CMatrix sensing_snapshot(const RadarScene& scene, const OfdmGrid& grid,
                         const PowerAllocation& alloc, const SymbolBlock& symbols,
                         double noise_var, std::uint64_t seed);

enum class NlosCoherence { PerFrame, PerSymbol };

/// Eve's leaked reference link (Rician), after removal of the known LoS phase.
struct RicianRef {
  double k_factor = 10.0;  ///< linear; +inf means pure LoS
  double gain = 1.0;
  double noise_var = 0.0;
  NlosCoherence coherence = NlosCoherence::PerFrame;

  double los_fraction() const;
  /// gK/(K+1) / (g/(K+1) + sigma^2).
  double reference_sinr() const;

  /// Picks the noise variance that yields `sinr` (linear) for the given K and gain.
  /// Throws ConfigError if the NLoS share alone already exceeds the budget.
  static RicianRef from_sinr(double sinr, double k_factor, double gain = 1.0,
                             NlosCoherence coherence = NlosCoherence::PerFrame);
};

/// Reference signal at Eve: sqrt(gK/(K+1)) x + sqrt(g/(K+1)) h_nlos .* x + z.
CMatrix eve_reference(const PowerAllocation& alloc, const SymbolBlock& symbols, const RicianRef& ref,
                      std::uint64_t seed);

/// Per-subcarrier downlink channel and receiver noise of the typical user.
struct CommChannel {
  CVector gains;
  double noise_var = 1.0;

  int n() const { return static_cast<int>(gains.size()); }
  /// |h_i|^2 / sigma_c^2.
  RVector snr_per_unit_power() const { return gains.array().abs2() / noise_var; }
};

/// Unit-phase flat channel with |h|^2 / sigma^2 = snr (linear).
CommChannel flat_channel(int n, double snr);
/// i.i.d. Rayleigh taps with E|h|^2 / sigma^2 = snr (linear).
CommChannel rayleigh_channel(int n, double snr, std::uint64_t seed);

/// (B/N) sum_i log2(1 + |h_i|^2 |w_i|^2 / sigma_c^2), in bit/s.
double comm_rate(const CommChannel& ch, const PowerAllocation& alloc, const OfdmGrid& grid);

}  // namespace afs
