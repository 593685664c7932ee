#include "afshape/detection.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "afshape/csv.hpp"
#include "afshape/errors.hpp"
#include "afshape/parallel.hpp"
#include "afshape/rng.hpp"

namespace afs {

double CfarConfig::threshold_factor() const {
  const double nt = total_training();
  return nt * (std::pow(pfa, -1.0 / nt) - 1.0);
}

DetectionResult ca_cfar(std::span<const double> cell_power, const CfarConfig& cfg) {
  const int n = static_cast<int>(cell_power.size());
  if (cfg.train_cells < 1 || cfg.guard_cells < 0) throw ConfigError("CFAR window sizes must be positive");
  if (!(cfg.pfa > 0.0 && cfg.pfa < 1.0)) throw ConfigError("CFAR pfa must lie in (0, 1)");
  if (n <= 2 * (cfg.train_cells + cfg.guard_cells) + 1) {
    throw ConfigError("CFAR window does not fit in the range profile");
  }
  // prefix[i] = sum of cell_power[0..i) over two periods for circular windows.
  std::vector<double> prefix(2 * static_cast<std::size_t>(n) + 1, 0.0);
  for (int i = 0; i < 2 * n; ++i) prefix[i + 1] = prefix[i] + cell_power[i % n];
  auto window = [&](int lo, int len) {  // sum of `len` cells starting at circular index lo
    const int start = ((lo % n) + n) % n;
    return prefix[start + len] - prefix[start];
  };

  const double t = cfg.threshold_factor();
  const double nt = cfg.total_training();
  DetectionResult out;
  out.threshold_profile.resize(n);
  for (int k = 0; k < n; ++k) {
    const double lead = window(k - cfg.guard_cells - cfg.train_cells, cfg.train_cells);
    const double lag = window(k + cfg.guard_cells + 1, cfg.train_cells);
    out.threshold_profile[k] = t * (lead + lag) / nt;
    if (cell_power[k] > out.threshold_profile[k]) out.detected_bins.push_back(k);
  }
  return out;
}

DetectionResult ca_cfar(const RangeProfile& profile, const CfarConfig& cfg) {
  const RVector power = profile.bins.array().abs2();
  return ca_cfar(std::span<const double>(power.data(), static_cast<std::size_t>(power.size())), cfg);
}

WilsonInterval wilson_interval(long k, long n, double z) {
  if (n <= 0) return {0.0, 1.0};
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / nn;
  const double centre = (p + z2 / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn)) / denom;
  // The bounds touch 0 and 1 exactly at k = 0 and k = n; rounding would miss them.
  const double low = k == 0 ? 0.0 : std::max(0.0, centre - half);
  const double high = k == n ? 1.0 : std::min(1.0, centre + half);
  return {low, high};
}

namespace {

constexpr std::uint64_t kPhaseStream = 101;

bool credited(const std::vector<int>& detections, double target_bin, int credit, int n) {
  const double truth = std::round(target_bin);
  for (int d : detections) {
    if (dsp::circular_distance(d, truth, n) <= credit + 1e-9) return true;
  }
  return false;
}

}  // namespace

std::vector<PdPoint> pd_curve(const PdScenario& scenario, const CfarConfig& cfg,
                              std::span<const double> snr_grid_db, int trials, std::uint64_t seed,
                              int threads) {
  if (trials <= 0) throw ConfigError("pd_curve needs at least one trial");
  const OfdmGrid& g = scenario.setup.grid;
  const double sigma2 = scenario.rx.who == Observer::Alice ? scenario.setup.alice_noise_var
                                                           : scenario.setup.eve_noise_var;
  const double target_bin = g.bin_for_range(scenario.target_range_m);
  const std::size_t points = snr_grid_db.size();
  // hits[t * points + s]: trial t detected the target at SNR index s.
  std::vector<char> hits(static_cast<std::size_t>(trials) * points, 0);

  // Every receiver is linear in the echo for a fixed transmission and
  // reference, so the filtered output at any target SNR is the clutter+noise
  // output plus a scaled copy of the noise-free unit-target output.
  SensingSetup noiseless = scenario.setup;
  noiseless.alice_noise_var = 0.0;
  noiseless.eve_noise_var = 0.0;

  parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
    const std::uint64_t frame_seed = derive_seed(seed, t);
    Rng phases(derive_seed(frame_seed, kPhaseStream));
    RadarScene background;
    for (const auto& c : scenario.clutter) {
      background.reflectors.push_back(reflector_at_range(g, c.range_m, c.snr, sigma2,
                                                         ReflectorKind::Clutter,
                                                         2.0 * kPi * phases.uniform()));
    }
    RadarScene target;
    target.reflectors.push_back(reflector_at_range(g, scenario.target_range_m, 1.0, sigma2,
                                                   ReflectorKind::Target,
                                                   2.0 * kPi * phases.uniform()));
    background.validate(g);
    target.validate(g);

    const CVector base =
        integrated_profile(simulate_filtered(scenario.setup, background, scenario.rx, frame_seed), g,
                           scenario.rx.kind, scenario.rx.who)
            .bins;
    const CVector unit =
        integrated_profile(simulate_filtered(noiseless, target, scenario.rx, frame_seed), g,
                           scenario.rx.kind, scenario.rx.who)
            .bins;
    RVector power(g.n);
    for (std::size_t s = 0; s < points; ++s) {
      const double amp = std::sqrt(db_to_linear(snr_grid_db[s]));
      power = (base + amp * unit).array().abs2();
      const DetectionResult det =
          ca_cfar(std::span<const double>(power.data(), static_cast<std::size_t>(g.n)), cfg);
      hits[t * points + s] = credited(det.detected_bins, target_bin, scenario.credit_bins, g.n) ? 1 : 0;
    }
  });

  std::vector<PdPoint> curve(points);
  for (std::size_t s = 0; s < points; ++s) {
    long k = 0;
    for (int t = 0; t < trials; ++t) k += hits[static_cast<std::size_t>(t) * points + s];
    const auto ci = wilson_interval(k, trials);
    curve[s] = {snr_grid_db[s], static_cast<double>(k) / trials, ci.low, ci.high, k, trials};
  }
  return curve;
}

double snr_at_pd(const std::vector<PdPoint>& curve, double pd) {
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i].pd < pd) continue;
    if (i == 0) return curve[0].snr_db;
    const auto& a = curve[i - 1];
    const auto& b = curve[i];
    const double frac = (pd - a.pd) / (b.pd - a.pd);
    return a.snr_db + frac * (b.snr_db - a.snr_db);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

void write_pd_csv(std::ostream& os, const std::vector<PdPoint>& curve, const std::string& receiver,
                  const std::string& waveform_id, bool header) {
  if (header) os << "snr_db,pd,ci_low,ci_high,receiver,waveform_id\n";
  CsvWriter w(os, {});
  for (const auto& p : curve) w.row(p.snr_db, p.pd, p.ci_low, p.ci_high, receiver, waveform_id);
}

}  // namespace afs
