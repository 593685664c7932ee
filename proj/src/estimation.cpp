#include "afshape/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Eigenvalues>

#include "afshape/dsp.hpp"
#include "afshape/errors.hpp"
#include "afshape/parallel.hpp"

namespace afs {

namespace {

// Roots closer than this are one root (a reflected pair, or a split double root).
constexpr double kRootMergeTol = 1e-5;
// Roots this close to the unit circle come from a noise-free subspace; their
// angle is refined as the exact minimum of the pseudo-spectrum.
constexpr double kOnCircleTol = 1e-5;

cd reflect_inside(cd z) { return std::abs(z) > 1.0 ? 1.0 / std::conj(z) : z; }

/// p(z) = sum_i b_i z^i with b_i = coeffs[i], and p'(z).
std::pair<cd, cd> horner(const CVector& b, cd z) {
  cd p = 0.0, dp = 0.0;
  for (Eigen::Index i = b.size() - 1; i >= 0; --i) {
    dp = dp * z + p;
    p = p * z + b[i];
  }
  return {p, dp};
}

double horner_scale(const CVector& b, double radius) {
  double s = 0.0, r = 1.0;
  for (Eigen::Index i = 0; i < b.size(); ++i, r *= radius) s += std::abs(b[i]) * r;
  return s;
}

struct SpectrumPoint {
  double value;      // P(theta)
  double slope;      // P'(theta)
  double curvature;  // P''(theta)
};

/// P(theta) = Re sum_k c_k e^{jk theta} and its first two derivatives.
SpectrumPoint pseudo_spectrum(const CVector& coeffs, double theta) {
  const Eigen::Index l1 = (coeffs.size() - 1) / 2;
  SpectrumPoint s{0.0, 0.0, 0.0};
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
    const double k = static_cast<double>(i - l1);
    const cd term = coeffs[i] * std::polar(1.0, k * theta);
    s.value += term.real();
    s.slope += -k * term.imag();
    s.curvature += -k * k * term.real();
  }
  return s;
}

/// Refines theta to a stationary point of the pseudo-spectrum.
double polish_angle(const CVector& coeffs, double theta) {
  for (int it = 0; it < 30; ++it) {
    const SpectrumPoint s = pseudo_spectrum(coeffs, theta);
    if (!(s.curvature > 0.0)) break;
    const double step = s.slope / s.curvature;
    theta -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return theta;
}

std::vector<cd> pick_nearest_circle(std::vector<cd> roots, int count) {
  for (auto& z : roots) z = reflect_inside(z);
  std::sort(roots.begin(), roots.end(),
            [](cd a, cd b) { return std::abs(a) > std::abs(b); });
  std::vector<cd> picked;
  for (cd z : roots) {
    if (static_cast<int>(picked.size()) == count) break;
    const bool dup = std::any_of(picked.begin(), picked.end(),
                                 [&](cd p) { return std::abs(p - z) < kRootMergeTol; });
    if (!dup) picked.push_back(z);
  }
  return picked;
}

std::vector<cd> companion_roots(const CVector& b) {
  Eigen::Index deg = b.size() - 1;
  while (deg > 0 && std::abs(b[deg]) == 0.0) --deg;
  if (deg < 1) throw EstimationError("noise polynomial is constant");
  Eigen::MatrixXcd comp = Eigen::MatrixXcd::Zero(deg, deg);
  for (Eigen::Index i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (Eigen::Index i = 0; i < deg; ++i) comp(i, deg - 1) = -b[i] / b[deg];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(comp, false);
  if (es.info() != Eigen::Success) throw EstimationError("companion eigensolve failed");
  const auto& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

std::vector<cd> newton_roots(const CVector& b, const CVector& coeffs, int count) {
  const Eigen::Index l = (coeffs.size() + 1) / 2;
  int grid = 1024;
  while (grid < 8 * l) grid *= 2;
  CVector folded = CVector::Zero(grid);
  for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
    const Eigen::Index k = i - (l - 1);
    folded[((k % grid) + grid) % grid] += coeffs[i];
  }
  const CVector spectrum = dsp::idft_sum(folded);

  std::vector<int> minima;
  for (int g = 0; g < grid; ++g) {
    const double v = spectrum[g].real();
    if (v <= spectrum[(g + grid - 1) % grid].real() && v < spectrum[(g + 1) % grid].real()) {
      minima.push_back(g);
    }
  }
  std::sort(minima.begin(), minima.end(),
            [&](int a, int c) { return spectrum[a].real() < spectrum[c].real(); });
  const auto candidates = std::min<std::size_t>(minima.size(), static_cast<std::size_t>(3 * count + 6));

  std::vector<cd> roots;
  for (std::size_t c = 0; c < candidates; ++c) {
    // Near a reflected pair (rho e^{j theta0}, e^{j theta0} / rho) the
    // pseudo-spectrum is proportional to (1 - rho)^2 + (theta - theta0)^2,
    // so value / curvature at the minimum gives the start radius.
    const double theta = polish_angle(coeffs, 2.0 * kPi * minima[c] / grid);
    const SpectrumPoint sp = pseudo_spectrum(coeffs, theta);
    if (!(sp.curvature > 0.0)) continue;
    const double depth = std::sqrt(std::max(0.0, 2.0 * sp.value / sp.curvature));
    if (depth < kOnCircleTol) {
      roots.push_back(std::polar(1.0 - depth, theta));
      continue;
    }
    cd z = std::polar(std::max(0.5, 1.0 - depth), theta);
    bool ok = false;
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = horner(b, z);
      if (dp == cd(0.0)) break;
      cd step = p / dp;
      if (std::abs(step) > 0.1 * depth) step *= 0.1 * depth / std::abs(step);
      z -= step;
      if (std::abs(step) < 1e-14 * std::max(1.0, std::abs(z))) {
        ok = true;
        break;
      }
    }
    const double resid = std::abs(horner(b, z).first) / horner_scale(b, std::abs(z));
    if (ok || resid < 1e-10) roots.push_back(z);
  }
  return roots;
}

}  // namespace

CMatrix smoothed_covariance(const CMatrix& channel_estimates, const MusicConfig& cfg) {
  const Eigen::Index n = channel_estimates.cols();
  const int l = cfg.resolved_subarray(static_cast<int>(n));
  if (l < 2 || l > n) throw ConfigError("subarray length must lie in [2, N]");
  if (cfg.num_sources < 1 || cfg.num_sources >= l) {
    throw ConfigError("num_sources must be positive and below the subarray length");
  }
  CMatrix rows;
  if (cfg.average_symbols) {
    rows = channel_estimates.colwise().mean();
  } else {
    rows = channel_estimates;
  }
  const Eigen::Index shifts = n - l + 1;
  Eigen::MatrixXcd snaps(l, shifts * rows.rows());
  for (Eigen::Index m = 0; m < rows.rows(); ++m) {
    for (Eigen::Index s = 0; s < shifts; ++s) {
      snaps.col(m * shifts + s) = rows.row(m).segment(s, l).transpose();
    }
  }
  Eigen::MatrixXcd r = (snaps * snaps.adjoint()) / static_cast<double>(snaps.cols());
  if (cfg.forward_backward) {
    // J conj(R) J: reverse both indices of the conjugate.
    Eigen::MatrixXcd back = r.conjugate().reverse();
    r = 0.5 * (r + back);
  }
  return r;
}

CVector noise_polynomial(const CMatrix& covariance, int num_sources) {
  const Eigen::Index l = covariance.rows();
  if (covariance.cols() != l) throw LengthError("covariance must be square");
  if (!covariance.allFinite()) throw EstimationError("covariance has non-finite entries");
  const Eigen::MatrixXcd r = covariance;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(r);
  if (es.info() != Eigen::Success) throw EstimationError("covariance eigensolve failed");
  const auto& ev = es.eigenvalues();  // ascending
  const double top = ev[l - 1];
  if (!(top > 0.0)) throw EstimationError("covariance is zero");
  if (ev[l - num_sources] <= 1e-12 * top) {
    throw EstimationError("covariance rank is below the source count");
  }
  const Eigen::MatrixXcd us = es.eigenvectors().rightCols(num_sources);
  const Eigen::MatrixXcd ps = us * us.adjoint();
  // P_noise = I - P_signal; c_k = sum_{j - i = k} P_noise(i, j).
  CVector coeffs = CVector::Zero(2 * l - 1);
  for (Eigen::Index i = 0; i < l; ++i) {
    for (Eigen::Index j = 0; j < l; ++j) coeffs[j - i + l - 1] -= ps(i, j);
  }
  coeffs[l - 1] += static_cast<double>(l);
  return coeffs;
}

std::vector<cd> roots_near_unit_circle(const CVector& coeffs, int count, RootingMethod method) {
  // Multiplying by z^(L-1) turns the Laurent series into an ordinary polynomial
  // whose coefficient of z^i is coeffs[i].
  const CVector& b = coeffs;
  std::vector<cd> picked;
  if (method == RootingMethod::Newton) {
    picked = pick_nearest_circle(newton_roots(b, coeffs, count), count);
  }
  if (static_cast<int>(picked.size()) < count) {
    picked = pick_nearest_circle(companion_roots(b), count);
  }
  if (static_cast<int>(picked.size()) < count) throw EstimationError("too few distinct roots");
  for (auto& z : picked) {
    if (1.0 - std::abs(z) < kOnCircleTol) z = std::polar(1.0, polish_angle(coeffs, std::arg(z)));
  }
  return picked;
}

std::vector<double> root_music_ranges(const CMatrix& channel_estimates, const MusicConfig& cfg,
                                      const OfdmGrid& grid) {
  if (channel_estimates.cols() != grid.n) throw LengthError("channel estimates must span N subcarriers");
  const CMatrix cov = smoothed_covariance(channel_estimates, cfg);
  const CVector coeffs = noise_polynomial(cov, cfg.num_sources);
  const auto roots = roots_near_unit_circle(coeffs, cfg.num_sources, cfg.rooting);
  // z = exp(-j 2 pi df tau)  =>  range = -arg(z) / (2 pi) * R_max, wrapped.
  std::vector<double> ranges;
  const double r_max = grid.r_max_m();
  for (cd z : roots) {
    double r = -std::arg(z) / (2.0 * kPi) * r_max;
    r = std::fmod(r, r_max);
    if (r < 0.0) r += r_max;
    ranges.push_back(r);
  }
  std::sort(ranges.begin(), ranges.end());
  return ranges;
}

std::vector<double> assignment_errors(const std::vector<double>& estimates,
                                      const std::vector<double>& truths, double period) {
  const std::size_t slots = std::max(estimates.size(), truths.size());
  if (slots > 8) throw ConfigError("assignment supports at most 8 reflectors");
  const double missing = period / 2.0;
  std::vector<std::size_t> perm(slots);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<double> best(truths.size(), missing);
  double best_cost = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    std::vector<double> err(truths.size());
    for (std::size_t t = 0; t < truths.size(); ++t) {
      const std::size_t e = perm[t];
      err[t] = e < estimates.size() ? dsp::circular_distance(estimates[e], truths[t], period) : missing;
      cost += err[t] * err[t];
    }
    if (cost < best_cost) {
      best_cost = cost;
      best = err;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

SceneSampler two_target_sampler(const OfdmGrid& grid, double strong_snr, double gap_low,
                                double gap_high, double min_range_m, double max_range_m,
                                double min_separation_m) {
  if (!(gap_low > 0.0 && gap_high >= gap_low)) throw ConfigError("SNR gap bounds must be positive and ordered");
  if (max_range_m - min_range_m < min_separation_m) throw ConfigError("range window narrower than the separation");
  return [=](Rng& rng, double noise_var) {
    double r1 = 0.0, r2 = 0.0;
    do {
      r1 = min_range_m + (max_range_m - min_range_m) * rng.uniform();
      r2 = min_range_m + (max_range_m - min_range_m) * rng.uniform();
    } while (std::abs(r1 - r2) < min_separation_m);
    const double log_gap = std::log(gap_low) + (std::log(gap_high) - std::log(gap_low)) * rng.uniform();
    const double weak_snr = strong_snr / std::exp(log_gap);
    SampledScene s;
    s.scene.reflectors.push_back(
        reflector_at_range(grid, r1, strong_snr, noise_var, ReflectorKind::Target, 2.0 * kPi * rng.uniform()));
    s.scene.reflectors.push_back(
        reflector_at_range(grid, r2, weak_snr, noise_var, ReflectorKind::Target, 2.0 * kPi * rng.uniform()));
    s.true_ranges_m = {r1, r2};
    return s;
  };
}

namespace {

constexpr std::uint64_t kSceneStream = 201;

struct TrialErrors {
  double mse_alice = 0.0;
  double mse_eve = 0.0;
  bool replica_lock = false;
};

double mean_square(const std::vector<double>& errs) {
  double s = 0.0;
  for (double e : errs) s += e * e;
  return errs.empty() ? 0.0 : s / static_cast<double>(errs.size());
}

std::vector<double> estimate_or_empty(const CMatrix& filtered, const MusicConfig& cfg,
                                      const OfdmGrid& grid) {
  try {
    return root_music_ranges(filtered, cfg, grid);
  } catch (const EstimationError&) {
    return {};
  }
}

bool locks_on_replica(const std::vector<double>& estimates, const std::vector<double>& truths,
                      int kappa, const OfdmGrid& grid) {
  if (kappa <= 1) return false;
  const double r_max = grid.r_max_m();
  const double spacing = r_max / kappa;
  for (double e : estimates) {
    for (double t : truths) {
      for (int j = 1; j < kappa; ++j) {
        if (dsp::circular_distance(e, t + j * spacing, r_max) <= grid.bin_range_m()) return true;
      }
    }
  }
  return false;
}

}  // namespace

RmseReport rmse_experiment(const RmseScenario& scenario, int trials, std::uint64_t seed, int threads) {
  if (trials <= 1) throw ConfigError("rmse_experiment needs at least two trials");
  if (!scenario.sampler) throw ConfigError("rmse_experiment needs a scene sampler");
  const SensingSetup& setup = scenario.setup;
  const OfdmGrid& g = setup.grid;
  const int kappa = setup.alloc.structure ? setup.alloc.structure->kappa : 1;
  std::vector<TrialErrors> per_trial(static_cast<std::size_t>(trials));

  parallel_for(per_trial.size(), threads, [&](std::size_t t) {
    const std::uint64_t frame_seed = derive_seed(seed, t);
    Rng scene_rng(derive_seed(frame_seed, kSceneStream));
    const SampledScene sampled = scenario.sampler(scene_rng, setup.alice_noise_var);
    sampled.scene.validate(g);
    const CMatrix alice = simulate_filtered(setup, sampled.scene,
                                            {Observer::Alice, scenario.alice_receiver}, frame_seed);
    const CMatrix eve =
        simulate_filtered(setup, sampled.scene, {Observer::Eve, scenario.eve_receiver}, frame_seed);
    const auto est_a = estimate_or_empty(alice, scenario.music, g);
    const auto est_e = estimate_or_empty(eve, scenario.music, g);
    auto& out = per_trial[t];
    out.mse_alice = mean_square(assignment_errors(est_a, sampled.true_ranges_m, g.r_max_m()));
    out.mse_eve = mean_square(assignment_errors(est_e, sampled.true_ranges_m, g.r_max_m()));
    out.replica_lock = locks_on_replica(est_e, sampled.true_ranges_m, kappa, g);
  });

  dsp::CompensatedSum sa, se, saa, see, sae;
  long locks = 0;
  for (const auto& p : per_trial) {
    sa.add(p.mse_alice);
    se.add(p.mse_eve);
    saa.add(p.mse_alice * p.mse_alice);
    see.add(p.mse_eve * p.mse_eve);
    sae.add(p.mse_alice * p.mse_eve);
    locks += p.replica_lock ? 1 : 0;
  }
  const double n = trials;
  const double ma = sa.value() / n, me = se.value() / n;
  const double va = std::max(0.0, (saa.value() - n * ma * ma) / (n - 1));
  const double ve = std::max(0.0, (see.value() - n * me * me) / (n - 1));
  const double cov = (sae.value() - n * ma * me) / (n - 1);

  RmseReport rep;
  rep.trials = trials;
  rep.rmse_alice_m = std::sqrt(ma);
  rep.rmse_eve_m = std::sqrt(me);
  rep.gap_m = rep.rmse_eve_m - rep.rmse_alice_m;
  // Delta method: d sqrt(m) = dm / (2 sqrt(m)).
  const double ga = rep.rmse_alice_m > 0.0 ? 0.5 / rep.rmse_alice_m : 0.0;
  const double ge = rep.rmse_eve_m > 0.0 ? 0.5 / rep.rmse_eve_m : 0.0;
  constexpr double z = 1.959963984540054;
  rep.ci_alice_m = z * ga * std::sqrt(va / n);
  rep.ci_eve_m = z * ge * std::sqrt(ve / n);
  rep.ci_gap_m = z * std::sqrt(std::max(0.0, (ge * ge * ve + ga * ga * va - 2.0 * ga * ge * cov) / n));
  rep.eve_replica_lock_fraction = static_cast<double>(locks) / n;
  return rep;
}

}  // namespace afs
