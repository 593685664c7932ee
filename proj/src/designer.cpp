#include "afshape/designer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "afshape/csv.hpp"
#include "afshape/dsp.hpp"
#include "afshape/errors.hpp"

namespace afs {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void check_eps(double eps_psl, double eps_isl) {
  if (!(eps_psl > 0.0 && eps_psl < 1.0)) throw ConfigError("eps_psl must lie in (0, 1) (linear)");
  if (!(eps_isl > 0.0)) throw ConfigError("eps_isl must be positive (linear)");
}

}  // namespace

int select_kappa(double eps_isl, double eps_psl, double mu4, int n) {
  check_eps(eps_psl, eps_isl);
  if (!is_power_of_two(n)) throw ConfigError("subcarrier count must be a power of two");
  const double arg = (eps_isl - mu4 + 1.0) / (eps_psl * mu4) + 1.0;
  int kappa = 2;
  if (arg > 1.0) {
    const double e = std::floor(std::log2(arg)) + 1.0;
    if (e > 30.0) throw InfeasibleSecurityError("required comb spacing exceeds N/2");
    kappa = 1 << static_cast<int>(e);
  }
  if (kappa > n / 2) {
    std::ostringstream msg;
    msg << "required comb spacing " << kappa << " exceeds N/2 = " << n / 2;
    throw InfeasibleSecurityError(msg.str());
  }
  return kappa;
}

double psl_budget(double eps_psl, int kappa, int n) {
  if (!(eps_psl >= 0.0 && eps_psl <= 1.0)) throw ConfigError("eps_psl must lie in [0, 1] (linear)");
  if (kappa < 1) throw ConfigError("kappa must be positive");
  return n * (kappa - 1.0) / kappa * (1.0 - std::sqrt(eps_psl));
}

RVector project_capped_simplex(const RVector& y, double total, double floor) {
  const Eigen::Index n = y.size();
  const double excess = total - n * floor;
  if (excess < -1e-12 * std::max(1.0, std::abs(total))) {
    throw InfeasibleSecurityError("power floor leaves no room for the required total");
  }
  if (excess <= 0.0) return RVector::Constant(n, floor);
  std::vector<double> u(y.data(), y.data() + n);
  for (auto& v : u) v -= floor;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0, tau = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumsum += u[j];
    const double t = (cumsum - excess) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) tau = t;
  }
  RVector x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = floor + std::max(y[i] - floor - tau, 0.0);
  return x;
}

DesignPolytope::DesignPolytope(int n, int kappa, int n0, double budget, double floor)
    : n_(n), kappa_(kappa), n0_(n0), budget_(budget), floor_(floor), complement_(n) {
  if (kappa < 1 || n % kappa != 0) throw DivisibilityError("kappa must divide N");
  if (n0 < 1 || n0 > kappa) throw ConfigError("n0 must lie in [1, kappa]");
  if (!(floor > 0.0)) throw ConfigError("power floor must be positive");
  int complement_count = 0;
  for (int i = 0; i < n; ++i) {
    complement_[i] = kappa > 1 && !in_dominant_set(i, kappa, n0);
    complement_count += complement_[i] ? 1 : 0;
  }
  const int dominant_count = n - complement_count;
  if (complement_count * floor > budget + 1e-12 || dominant_count * floor > n - budget + 1e-12 ||
      n * floor > n) {
    throw InfeasibleSecurityError("power floor is incompatible with the PSL budget");
  }
}

double DesignPolytope::complement_sum(const RVector& a) const {
  dsp::CompensatedSum s;
  for (int i = 0; i < n_; ++i) {
    if (complement_[i]) s.add(a[i]);
  }
  return s.value();
}

RVector DesignPolytope::project(const RVector& y) const {
  RVector x = project_capped_simplex(y, n_, floor_);
  if (complement_sum(x) <= budget_ + 1e-12 * n_) return x;
  std::vector<Eigen::Index> comp, dom;
  for (int i = 0; i < n_; ++i) (complement_[i] ? comp : dom).push_back(i);
  RVector yc(static_cast<Eigen::Index>(comp.size())), yd(static_cast<Eigen::Index>(dom.size()));
  for (std::size_t i = 0; i < comp.size(); ++i) yc[static_cast<Eigen::Index>(i)] = y[comp[i]];
  for (std::size_t i = 0; i < dom.size(); ++i) yd[static_cast<Eigen::Index>(i)] = y[dom[i]];
  const RVector xc = project_capped_simplex(yc, budget_, floor_);
  const RVector xd = project_capped_simplex(yd, n_ - budget_, floor_);
  for (std::size_t i = 0; i < comp.size(); ++i) x[comp[i]] = xc[static_cast<Eigen::Index>(i)];
  for (std::size_t i = 0; i < dom.size(); ++i) x[dom[i]] = xd[static_cast<Eigen::Index>(i)];
  return x;
}

bool DesignPolytope::contains(const RVector& a, double tol) const {
  if (a.size() != n_) return false;
  if (std::abs(dsp::compensated_sum({a.data(), static_cast<std::size_t>(a.size())}) - n_) > tol * n_) {
    return false;
  }
  if (a.minCoeff() < floor_ - tol) return false;
  return complement_sum(a) <= budget_ + tol * n_;
}

RVector minimize_on_polytope(const SmoothObjective& f, const DesignPolytope& poly,
                             const RVector& start, const SolverOptions& opts, SolverTrace& trace) {
  constexpr double kAlphaMin = 1e-12, kAlphaMax = 1e12, kSufficient = 1e-4;
  RVector x = poly.project(start);
  RVector g(x.size()), gn(x.size());
  double fx = f(x, g);
  std::deque<double> history{fx};

  auto pg_norm = [&](const RVector& at, const RVector& grad) {
    return (poly.project(at - grad) - at).norm();
  };
  double pg = pg_norm(x, g);
  double alpha = std::clamp(1.0 / std::max(pg, 1e-300), kAlphaMin, kAlphaMax);
  trace = {};

  for (int it = 0; it < opts.max_iterations; ++it) {
    trace.iterations = it;
    trace.pg_norm = pg;
    if (pg < opts.tolerance) {
      trace.converged = true;
      return x;
    }
    const RVector d = poly.project(x - alpha * g) - x;
    const double gd = g.dot(d);
    const double f_ref = *std::max_element(history.begin(), history.end());
    double lambda = 1.0;
    RVector xn;
    double fn = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      xn = x + lambda * d;
      fn = f(xn, gn);
      if (fn <= f_ref + kSufficient * lambda * gd) break;
      const double denom = fn - fx - lambda * gd;
      const double trial = denom > 0.0 ? -0.5 * lambda * lambda * gd / denom : 0.5 * lambda;
      lambda = (trial >= 0.1 * lambda && trial <= 0.9 * lambda) ? trial : 0.5 * lambda;
    }
    const RVector s = xn - x;
    const RVector y = gn - g;
    const double sy = s.dot(y);
    // Alternate the two Barzilai-Borwein step lengths.
    if (sy > 0.0) {
      alpha = (it % 2 == 0) ? s.squaredNorm() / sy : sy / y.squaredNorm();
      alpha = std::clamp(alpha, kAlphaMin, kAlphaMax);
    } else {
      alpha = kAlphaMax;
    }
    x = xn;
    g = gn;
    fx = fn;
    history.push_back(fx);
    if (static_cast<int>(history.size()) > opts.memory) history.pop_front();
    pg = pg_norm(x, g);
  }
  trace.iterations = opts.max_iterations;
  trace.pg_norm = pg;
  trace.converged = pg < opts.tolerance;
  return x;
}

double snr_loss(const RVector& power, const Constellation& c) {
  dsp::CompensatedSum s;
  for (Eigen::Index i = 0; i < power.size(); ++i) s.add(1.0 / power[i]);
  return c.nu_m2 / static_cast<double>(power.size()) * s.value();
}

double rate(const RVector& power, const CommChannel& ch, const OfdmGrid& grid) {
  if (power.size() != ch.n()) throw LengthError("channel and allocation lengths differ");
  const RVector snr = ch.snr_per_unit_power();
  dsp::CompensatedSum s;
  for (Eigen::Index i = 0; i < power.size(); ++i) s.add(std::log2(1.0 + snr[i] * power[i]));
  return grid.bandwidth_hz / grid.n * s.value();
}

PredictedMetrics predict_metrics(const PowerAllocation& alloc, const Constellation& c,
                                 const CommChannel& ch, const OfdmGrid& grid) {
  const AcfProfile profile = expected_sq_acf_exact(alloc, c);
  return {rate(alloc.power, ch, grid), snr_loss(alloc.power, c), psl(profile), isl(profile)};
}

namespace {

/// F(a) = w_loss L(a) - w_rate R(a) / B, gradient included.
SmoothObjective weighted_objective(const DesignRequest& req, double w_loss, double w_rate) {
  const RVector snr = req.channel.snr_per_unit_power();
  const double n = req.grid.n;
  const double nu = req.constellation.nu_m2;
  return [=](const RVector& a, RVector& grad) {
    grad.resize(a.size());
    dsp::CompensatedSum inv, logs;
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      inv.add(1.0 / a[i]);
      logs.add(std::log2(1.0 + snr[i] * a[i]));
      grad[i] = -w_loss * nu / (n * a[i] * a[i]) -
                w_rate / (n * std::log(2.0)) * snr[i] / (1.0 + snr[i] * a[i]);
    }
    return w_loss * nu / n * inv.value() - w_rate / n * logs.value();
  };
}

struct ShiftSolution {
  RVector power;
  SolverTrace trace;
};

ShiftSolution solve_shift(const DesignRequest& req, const DesignPolytope& poly, double w_loss,
                          double w_rate) {
  ShiftSolution out;
  out.power = minimize_on_polytope(weighted_objective(req, w_loss, w_rate), poly,
                                   RVector::Ones(poly.n()), req.solver, out.trace);
  if (!out.trace.converged && !(out.trace.pg_norm <= req.solver.accept_tolerance)) {
    std::ostringstream msg;
    msg << "projected gradient did not converge: n0=" << poly.n0() << " iterations="
        << out.trace.iterations << " pg_norm=" << out.trace.pg_norm
        << " tolerance=" << req.solver.tolerance << " accept_tolerance=" << req.solver.accept_tolerance;
    throw SolverError(msg.str());
  }
  return out;
}

}  // namespace

double design_objective(const RVector& power, const DesignRequest& req, double snr_loss_norm,
                        double rate_norm) {
  return -(1.0 - req.rho) * snr_loss(power, req.constellation) / snr_loss_norm +
         req.rho * rate(power, req.channel, req.grid) / rate_norm;
}

DesignResult solve_p2(const DesignRequest& req) {
  if (!(req.rho >= 0.0 && req.rho <= 1.0)) throw ConfigError("rho must lie in [0, 1]");
  if (req.channel.n() != req.grid.n) throw ConfigError("channel length must equal N");
  const int n = req.grid.n;
  const int kappa = select_kappa(req.eps_isl, req.eps_psl, req.constellation.mu4, n);
  const double budget = psl_budget(req.eps_psl, kappa, n);

  std::vector<int> shifts;
  if (req.n0) {
    if (*req.n0 < 1 || *req.n0 > kappa) throw ConfigError("n0 must lie in [1, kappa]");
    shifts.push_back(*req.n0);
  } else {
    shifts.resize(static_cast<std::size_t>(kappa));
    std::iota(shifts.begin(), shifts.end(), 1);
  }

  std::vector<DesignPolytope> polys;
  for (int s : shifts) polys.emplace_back(n, kappa, s, budget, req.power_floor);

  // Single-objective solves give the normalizers and seed the weighted solve.
  std::vector<ShiftSolution> loss_opt, rate_opt;
  double loss_norm = std::numeric_limits<double>::infinity();
  double rate_norm = 0.0;
  for (const auto& poly : polys) {
    loss_opt.push_back(solve_shift(req, poly, 1.0, 0.0));
    rate_opt.push_back(solve_shift(req, poly, 0.0, 1.0));
    loss_norm = std::min(loss_norm, snr_loss(loss_opt.back().power, req.constellation));
    rate_norm = std::max(rate_norm, rate(rate_opt.back().power, req.channel, req.grid));
  }
  if (!(rate_norm > 0.0)) throw SolverError("maximum rate is zero; channel carries no energy");

  DesignResult best;
  best.objective_value = -std::numeric_limits<double>::infinity();
  const double w_loss = (1.0 - req.rho) / loss_norm;
  const double w_rate = req.rho * req.grid.bandwidth_hz / rate_norm;
  for (std::size_t i = 0; i < polys.size(); ++i) {
    ShiftSolution sol;
    if (req.rho == 0.0) {
      sol = loss_opt[i];
    } else if (req.rho == 1.0) {
      sol = rate_opt[i];
    } else {
      sol = solve_shift(req, polys[i], w_loss, w_rate);
    }
    const double obj = design_objective(sol.power, req, loss_norm, rate_norm);
    if (obj > best.objective_value) {
      best.objective_value = obj;
      best.n0 = polys[i].n0();
      best.alloc.power = sol.power;
      best.trace = sol.trace;
    }
  }

  best.kappa = kappa;
  best.budget = budget;
  best.snr_loss_normalizer = loss_norm;
  best.rate_normalizer = rate_norm;
  const DesignPolytope& chosen = polys[static_cast<std::size_t>(best.n0 - shifts.front())];
  const double comp = chosen.complement_sum(best.alloc.power);
  const int comp_count = n - n / kappa;
  best.alloc.structure = AllocationStructure{(n - comp) / (n / kappa), comp / comp_count, kappa,
                                             best.n0, 0.0};
  best.predicted = predict_metrics(best.alloc, req.constellation, req.channel, req.grid);
  best.psl_slack = best.predicted.psl - req.eps_psl;
  best.isl_slack = best.predicted.isl - req.eps_isl;
  return best;
}

std::vector<TradeoffRow> tradeoff_sweep(const std::vector<int>& kappas, const std::vector<double>& qs,
                                        const Constellation& c, const CommChannel& ch,
                                        const OfdmGrid& grid, double floor) {
  const int n = grid.n;
  std::vector<TradeoffRow> rows;
  auto emit = [&](const std::string& label, int kappa, double q) {
    const bool flat = kappa == 1;
    const PowerAllocation alloc =
        flat ? equal_allocation(n)
             : structured_allocation(SecureAcfSpec::from_kappa_q(kappa, q), n, 1, floor);
    const AllocationStructure s{kappa - (kappa - 1.0) * q, q, kappa, 1, 0.0};
    const SecurityMetrics m = metrics_closed_form(s, c);
    const double loss = flat ? c.nu_m2 : c.nu_m2 / kappa * (1.0 / s.p + (kappa - 1.0) / s.q);
    rows.push_back({label, kappa, s.p, s.q, rate(alloc.power, ch, grid), loss, m.psl_linear,
                    m.isl_linear});
  };
  emit("sensing_optimal", 1, 1.0);
  for (int kappa : kappas) {
    if (kappa < 2 || n % kappa != 0) continue;
    for (double q : qs) {
      if (q < floor || q >= 1.0) continue;
      emit("grid", kappa, q);
    }
  }
  emit("security_optimal", n / 2, floor);
  return rows;
}

void write_tradeoff_csv(std::ostream& os, const std::vector<TradeoffRow>& rows) {
  CsvWriter w(os, {"label", "kappa", "p", "q", "rate_bps", "snr_loss", "psl", "isl"});
  for (const auto& r : rows) w.row(r.label, r.kappa, r.p, r.q, r.rate, r.snr_loss, r.psl, r.isl);
}

}  // namespace afs
