#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "afshape/acf.hpp"
#include "afshape/constellation.hpp"
#include "afshape/scene.hpp"
#include "afshape/waveform.hpp"

namespace afs {

/// Smallest power-of-two comb spacing whose artificial peaks lift the ISL to
/// eps_isl when the PSL sits at eps_psl (all linear):
///   kappa = 2^(floor(log2((eps_isl - mu4 + 1) / (eps_psl mu4) + 1)) + 1), at least 2.
/// Throws ConfigError unless n is a power of two and the eps values are in
/// range, InfeasibleSecurityError when kappa would exceed n / 2.
int select_kappa(double eps_isl, double eps_psl, double mu4, int n);

/// Largest total power the non-dominant subcarriers may carry while keeping
/// the PSL at or above eps_psl: N (kappa - 1) / kappa * (1 - sqrt(eps_psl)).
double psl_budget(double eps_psl, int kappa, int n);

/// {a : sum a = N, sum over the complement set <= budget, a >= floor}.
class DesignPolytope {
 public:
  DesignPolytope(int n, int kappa, int n0, double budget, double floor = kDefaultPowerFloor);

  int n() const { return n_; }
  int kappa() const { return kappa_; }
  int n0() const { return n0_; }
  double budget() const { return budget_; }
  double floor() const { return floor_; }
  bool in_complement(int index) const { return complement_[static_cast<std::size_t>(index)]; }

  /// Euclidean projection. Exact: the equality-constrained simplex projection
  /// is kept if it meets the budget; otherwise the budget binds and the two
  /// index sets are projected onto their own simplices.
  RVector project(const RVector& y) const;
  bool contains(const RVector& a, double tol = 1e-9) const;
  double complement_sum(const RVector& a) const;

 private:
  int n_, kappa_, n0_;
  double budget_, floor_;
  std::vector<bool> complement_;
};

/// Projection of y onto {x : sum x = total, x >= floor}.
RVector project_capped_simplex(const RVector& y, double total, double floor);

struct SolverOptions {
  double tolerance = 1e-8;  // on || P(a - grad) - a ||_2
  int max_iterations = 5000;
  /// Largest final projected-gradient norm accepted when the iteration cap
  /// stops the solver before `tolerance` is reached.
  double accept_tolerance = 1e-6;
  int memory = 10;          // nonmonotone line-search window
};

struct SolverTrace {
  int iterations = 0;
  double pg_norm = 0.0;
  bool converged = false;
};

/// Value and gradient of a smooth function to be minimized.
using SmoothObjective = std::function<double(const RVector& a, RVector& grad)>;

/// Spectral projected gradient (Barzilai-Borwein steps, nonmonotone
/// backtracking) from the projection of `start`.
RVector minimize_on_polytope(const SmoothObjective& f, const DesignPolytope& poly,
                             const RVector& start, const SolverOptions& opts, SolverTrace& trace);

/// Reciprocal-filter SNR loss (nu_m2 / N) sum 1 / a_n, linear.
double snr_loss(const RVector& power, const Constellation& c);
/// (B / N) sum log2(1 + |h_n|^2 a_n / sigma^2), bit/s.
double rate(const RVector& power, const CommChannel& ch, const OfdmGrid& grid);

struct DesignRequest {
  double rho = 0.5;
  double eps_psl = 0.31622776601683794;  // linear
  double eps_isl = 5.011872336272722;    // linear
  CommChannel channel;
  Constellation constellation;
  OfdmGrid grid;
  std::optional<int> n0;                 // nullopt searches all kappa shifts
  double power_floor = kDefaultPowerFloor;
  SolverOptions solver;
};

struct PredictedMetrics {
  double rate = 0.0;       // bit/s
  double snr_loss = 0.0;   // linear
  double psl = 0.0;        // linear, from the expected squared ACF
  double isl = 0.0;        // linear, from the expected squared ACF
};

struct DesignResult {
  PowerAllocation alloc;
  int kappa = 1;
  int n0 = 1;
  double budget = 0.0;
  PredictedMetrics predicted;
  double objective_value = 0.0;
  double snr_loss_normalizer = 0.0;  // min SNR loss over the feasible set
  double rate_normalizer = 0.0;      // max rate over the feasible set
  double psl_slack = 0.0;            // predicted psl - eps_psl
  double isl_slack = 0.0;            // predicted isl - eps_isl
  SolverTrace trace;
};

/// Maximizes -(1 - rho) L/L_min + rho R/R_max over the design polytope.
/// With n0 unset every shift is solved and the best objective kept; both
/// normalizers are then taken over all shifts so objectives are comparable.
/// Throws InfeasibleSecurityError, SolverError (with iteration diagnostics)
/// or ConfigError.
DesignResult solve_p2(const DesignRequest& req);

/// Objective of an arbitrary allocation under the normalizers of `result`.
double design_objective(const RVector& power, const DesignRequest& req, double snr_loss_norm,
                        double rate_norm);

struct TradeoffRow {
  std::string label;  // "grid", "sensing_optimal" or "security_optimal"
  int kappa = 1;
  double p = 1.0;
  double q = 1.0;
  double rate = 0.0;
  double snr_loss = 0.0;
  double psl = 0.0;
  double isl = 0.0;
};

/// Closed-form metrics of every valid (kappa, q) comb, p = kappa - (kappa - 1) q,
/// plus the equal-power point and the kappa = N/2, q = floor point.
std::vector<TradeoffRow> tradeoff_sweep(const std::vector<int>& kappas, const std::vector<double>& qs,
                                        const Constellation& c, const CommChannel& ch,
                                        const OfdmGrid& grid, double floor = kDefaultPowerFloor);

void write_tradeoff_csv(std::ostream& os, const std::vector<TradeoffRow>& rows);

/// Predicted metrics of any allocation: rate, reciprocal-filter loss and the PSL/ISL
/// of the exact expected squared ACF.
PredictedMetrics predict_metrics(const PowerAllocation& alloc, const Constellation& c,
                                 const CommChannel& ch, const OfdmGrid& grid);

}  // namespace afs
