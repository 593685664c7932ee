#include <algorithm>
#include <cmath>
#include <numeric>

#include "afshape/designer.hpp"
#include "afshape/errors.hpp"
#include "afshape/rng.hpp"
#include "doctest.h"

using namespace afs;

namespace {

// Separable concave program solved by dual bisection:
//   max sum_n [ -wl / a_n + wr log2(1 + g_n a_n) ]
//   s.t. sum a = N, sum_{complement} a <= budget, a >= floor.
// wl and wr fold in every constant factor of the loss and rate terms.
struct DualOracle {
  RVector g;
  std::vector<bool> complement;
  double budget;
  double floor;
  double wl;
  double wr;

  double marginal(int n, double a) const {
    return wl / (a * a) + wr * g[n] / (std::log(2.0) * (1.0 + g[n] * a));
  }

  double best_response(int n, double price) const {
    if (marginal(n, floor) <= price) return floor;
    double lo = floor, hi = floor;
    while (marginal(n, hi) > price) hi *= 2.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (marginal(n, mid) > price ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }

  RVector respond(double mu, double lambda) const {
    RVector a(g.size());
    for (int n = 0; n < g.size(); ++n) a[n] = best_response(n, mu + (complement[n] ? lambda : 0.0));
    return a;
  }

  // Price mu that makes the total N for a given budget multiplier.
  RVector balance(double lambda) const {
    const double total = static_cast<double>(g.size());
    double lo = 1e-12, hi = 1.0;
    while (respond(hi, lambda).sum() > total) hi *= 2.0;
    while (respond(lo, lambda).sum() < total && lo > 1e-300) lo *= 0.5;
    for (int it = 0; it < 200; ++it) {
      const double mid = std::sqrt(lo * hi);
      (respond(mid, lambda).sum() > total ? lo : hi) = mid;
    }
    return respond(std::sqrt(lo * hi), lambda);
  }

  double complement_sum(const RVector& a) const {
    double s = 0.0;
    for (int n = 0; n < a.size(); ++n) s += complement[n] ? a[n] : 0.0;
    return s;
  }

  RVector solve() const {
    RVector a = balance(0.0);
    if (complement_sum(a) <= budget) return a;
    double lo = 0.0, hi = 1e-6;
    while (complement_sum(balance(hi)) > budget) hi *= 4.0;
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      (complement_sum(balance(mid)) > budget ? lo : hi) = mid;
    }
    return balance(hi);
  }
};

DesignRequest base_request(const CommChannel& ch, double rho) {
  DesignRequest req;
  req.rho = rho;
  req.eps_psl = db_to_linear(-5.0);
  req.eps_isl = db_to_linear(7.0);
  req.constellation = make_constellation("16QAM");
  req.channel = ch;
  req.n0 = 1;
  return req;
}

DualOracle oracle_for(const DesignRequest& req, int kappa, double budget, double wl, double wr) {
  DualOracle o;
  o.g = req.channel.snr_per_unit_power();
  o.complement.resize(static_cast<std::size_t>(req.grid.n));
  for (int n = 0; n < req.grid.n; ++n) o.complement[n] = n % kappa != 0;
  o.budget = budget;
  o.floor = req.power_floor;
  o.wl = wl;
  o.wr = wr;
  return o;
}

/// Uniform-ish random point of the design polytope, built without the projection.
RVector random_feasible(const DesignPolytope& poly, Rng& rng) {
  const int n = poly.n();
  const int n_comp = n - n / poly.kappa();
  const double comp_room = poly.budget() - n_comp * poly.floor();
  const double comp_total = n_comp * poly.floor() + rng.uniform() * comp_room;
  RVector w(n);
  double wc = 0.0, wd = 0.0;
  for (int i = 0; i < n; ++i) {
    w[i] = -std::log(1.0 - rng.uniform());
    (poly.in_complement(i) ? wc : wd) += w[i];
  }
  const double dom_total = n - comp_total;
  const int n_dom = n - n_comp;
  RVector a(n);
  for (int i = 0; i < n; ++i) {
    a[i] = poly.in_complement(i) ? poly.floor() + (comp_total - n_comp * poly.floor()) * w[i] / wc
                                 : poly.floor() + (dom_total - n_dom * poly.floor()) * w[i] / wd;
  }
  return a;
}

}  // namespace

TEST_SUITE("designer") {
  TEST_CASE("comb spacing selection") {
    const double mu4 = 1.32;
    CHECK(select_kappa(db_to_linear(7.0), db_to_linear(-5.0), mu4, 256) == 16);
    // kappa = 2^(floor(log2(arg)) + 1), arg = (eps_isl - mu4 + 1) / (eps_psl mu4) + 1
    for (double isl_db : {-0.5, 1.0, 3.0, 5.0, 7.0, 9.0}) {
      for (double psl_db : {-3.0, -5.0, -8.0}) {
        const double arg = (db_to_linear(isl_db) - mu4 + 1) / (db_to_linear(psl_db) * mu4) + 1;
        const int expect = std::max(2, 1 << static_cast<int>(std::floor(std::log2(arg)) + 1));
        if (expect <= 512) CHECK(select_kappa(db_to_linear(isl_db), db_to_linear(psl_db), mu4, 1024) == expect);
      }
    }
    // ISL below the random-signaling floor still needs one artificial peak.
    CHECK(select_kappa(0.2, db_to_linear(-5.0), mu4, 256) == 2);
    CHECK_THROWS_AS(select_kappa(db_to_linear(7.0), db_to_linear(-5.0), mu4, 16), InfeasibleSecurityError);
    CHECK_THROWS_AS(select_kappa(db_to_linear(7.0), db_to_linear(-5.0), mu4, 96), ConfigError);
    CHECK_THROWS_AS(select_kappa(db_to_linear(7.0), 1.5, mu4, 256), ConfigError);
  }

  TEST_CASE("PSL budget") {
    CHECK(psl_budget(db_to_linear(-5.0), 16, 256) == doctest::Approx(105.0).epsilon(1e-3));
    CHECK(psl_budget(db_to_linear(-5.0), 16, 256) ==
          doctest::Approx(240.0 * (1.0 - std::pow(10.0, -0.25))).epsilon(1e-12));
    CHECK(psl_budget(0.0, 4, 64) == doctest::Approx(48.0));
    CHECK(psl_budget(1.0, 4, 64) == doctest::Approx(0.0));
  }

  TEST_CASE("capped simplex projection matches a threshold oracle") {
    Rng rng(5);
    for (int t = 0; t < 20; ++t) {
      RVector y(40);
      for (auto& v : y) v = 3.0 * rng.normal();
      const double total = 40.0, floor = 0.01;
      const RVector x = project_capped_simplex(y, total, floor);
      // x = max(y - tau, floor) with tau found by bisection.
      double lo = y.minCoeff() - 100.0, hi = y.maxCoeff() + 100.0;
      auto mass = [&](double tau) { return (y.array() - tau).max(floor).sum(); };
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mass(mid) > total ? lo : hi) = mid;
      }
      const RVector ref = (y.array() - 0.5 * (lo + hi)).max(floor);
      CHECK((x - ref).cwiseAbs().maxCoeff() < 1e-9);
    }
    CHECK_THROWS_AS(project_capped_simplex(RVector::Ones(4), 1.0, 0.5), InfeasibleSecurityError);
  }

  TEST_CASE("polytope projection satisfies the variational inequality") {
    const DesignPolytope poly(64, 4, 2, 20.0);
    Rng rng(11);
    for (int t = 0; t < 30; ++t) {
      RVector y(64);
      for (auto& v : y) v = 1.0 + 2.0 * rng.normal();
      const RVector p = poly.project(y);
      REQUIRE(poly.contains(p));
      CHECK((poly.project(p) - p).norm() < 1e-9);
      for (int s = 0; s < 20; ++s) {
        const RVector z = random_feasible(poly, rng);
        REQUIRE(poly.contains(z));
        CHECK((y - p).dot(z - p) <= 1e-8);
      }
    }
    CHECK_THROWS_AS(DesignPolytope(64, 3, 1, 10.0), DivisibilityError);
    CHECK_THROWS_AS(DesignPolytope(64, 4, 5, 10.0), ConfigError);
  }

  TEST_CASE("sensing-only design on a flat channel is analytic") {
    const OfdmGrid g;
    const DesignRequest req = base_request(flat_channel(g.n, 10.0), 0.0);
    const DesignResult r = solve_p2(req);
    CHECK(r.kappa == 16);
    const double budget = psl_budget(req.eps_psl, 16, g.n);
    // The budget binds; the loss sum 1/a is then minimized by equal powers
    // inside each of the two sets.
    const double comp = budget / 240.0;
    const double dom = (256.0 - budget) / 16.0;
    CHECK(comp == doctest::Approx(0.4375).epsilon(1e-3));
    CHECK(dom == doctest::Approx(9.4375).epsilon(1e-3));
    for (int n = 0; n < g.n; ++n) {
      CHECK(r.alloc.power[n] == doctest::Approx(n % 16 == 0 ? dom : comp).epsilon(1e-6));
    }
    CHECK(r.objective_value == doctest::Approx(-1.0));
    CHECK(r.trace.pg_norm <= 1e-6);
    CHECK(r.psl_slack >= -1e-9);
  }

  TEST_CASE("weighted design matches the dual oracle") {
    const OfdmGrid g;
    for (std::uint64_t seed : {3u, 4u}) {
      for (double rho : {0.3, 0.7}) {
        const DesignRequest req = base_request(rayleigh_channel(g.n, 10.0, seed), rho);
        const DesignResult r = solve_p2(req);
        const double budget = psl_budget(req.eps_psl, r.kappa, g.n);
        const double nu = req.constellation.nu_m2;
        const double bw = g.bandwidth_hz;
        // Normalizers from single-objective oracle solves.
        const RVector loss_opt = oracle_for(req, r.kappa, budget, 1.0, 0.0).solve();
        const RVector rate_opt = oracle_for(req, r.kappa, budget, 0.0, 1.0).solve();
        const double l_min = snr_loss(loss_opt, req.constellation);
        const double r_max = rate(rate_opt, req.channel, g);
        CHECK(r.snr_loss_normalizer == doctest::Approx(l_min).epsilon(1e-7));
        CHECK(r.rate_normalizer == doctest::Approx(r_max).epsilon(1e-7));
        const RVector ref =
            oracle_for(req, r.kappa, budget, (1 - rho) * nu / (g.n * l_min), rho * bw / (g.n * r_max)).solve();
        CHECK((r.alloc.power - ref).cwiseAbs().maxCoeff() < 1e-3);
        const double ref_obj = design_objective(ref, req, l_min, r_max);
        CHECK(r.objective_value >= ref_obj - 1e-8);
        CHECK(r.objective_value == doctest::Approx(ref_obj).epsilon(1e-7));
      }
    }
  }

  TEST_CASE("no random feasible point beats the solver") {
    const OfdmGrid g;
    Rng rng(2025);
    const DesignRequest req = base_request(rayleigh_channel(g.n, 10.0, 8), 0.5);
    const DesignResult r = solve_p2(req);
    const DesignPolytope poly(g.n, r.kappa, r.n0, r.budget);
    CHECK(poly.contains(r.alloc.power, 1e-8));
    for (int t = 0; t < 100; ++t) {
      const RVector z = random_feasible(poly, rng);
      REQUIRE(poly.contains(z));
      CHECK(design_objective(z, req, r.snr_loss_normalizer, r.rate_normalizer) <= r.objective_value + 1e-12);
    }
  }

  TEST_CASE("rate and loss rise together along the weight sweep") {
    const OfdmGrid g;
    const CommChannel ch = rayleigh_channel(g.n, 10.0, 21);
    double prev_rate = 0.0, prev_loss = 0.0;
    for (int i = 0; i <= 9; ++i) {
      const DesignResult r = solve_p2(base_request(ch, i / 9.0));
      CHECK(r.trace.pg_norm <= 1e-6);
      CHECK(r.predicted.rate >= prev_rate * (1 - 1e-9));
      CHECK(r.predicted.snr_loss >= prev_loss * (1 - 1e-9));
      prev_rate = r.predicted.rate;
      prev_loss = r.predicted.snr_loss;
    }
  }

  TEST_CASE("shift search is at least as good as any fixed shift") {
    const OfdmGrid g;
    DesignRequest req = base_request(rayleigh_channel(g.n, 10.0, 31), 0.5);
    req.eps_isl = db_to_linear(3.0);  // kappa = 8 keeps the search short
    req.n0.reset();
    const DesignResult searched = solve_p2(req);
    CHECK(searched.kappa == 8);
    for (int n0 = 1; n0 <= 8; ++n0) {
      req.n0 = n0;
      const DesignResult fixed = solve_p2(req);
      const double obj = design_objective(fixed.alloc.power, req, searched.snr_loss_normalizer,
                                          searched.rate_normalizer);
      CHECK(obj <= searched.objective_value + 1e-9);
    }
  }

  TEST_CASE("solver failures are reported") {
    const OfdmGrid g;
    DesignRequest req = base_request(rayleigh_channel(g.n, 10.0, 2), 0.5);
    req.solver.max_iterations = 2;
    req.solver.accept_tolerance = 1e-12;
    CHECK_THROWS_AS(solve_p2(req), SolverError);
    DesignRequest small = base_request(flat_channel(16, 10.0), 0.5);
    small.grid.n = 16;
    CHECK_THROWS_AS(solve_p2(small), InfeasibleSecurityError);
    DesignRequest bad = base_request(flat_channel(g.n, 10.0), 1.5);
    CHECK_THROWS_AS(solve_p2(bad), ConfigError);
  }

  TEST_CASE("tradeoff anchors") {
    const OfdmGrid g;
    const Constellation c = make_constellation("16QAM");
    const auto rows = tradeoff_sweep({4, 16}, {0.25, 0.5}, c, flat_channel(g.n, 10.0), g);
    const auto sensing = std::find_if(rows.begin(), rows.end(), [](const TradeoffRow& r) { return r.label == "sensing_optimal"; });
    const auto security = std::find_if(rows.begin(), rows.end(), [](const TradeoffRow& r) { return r.label == "security_optimal"; });
    REQUIRE(sensing != rows.end());
    REQUIRE(security != rows.end());
    CHECK(sensing->snr_loss == doctest::Approx(1.8889).epsilon(1e-4));
    CHECK(sensing->isl == doctest::Approx(0.32));
    CHECK(sensing->rate == doctest::Approx(50e6 * std::log2(11.0)));
    CHECK(security->kappa == 128);
    CHECK(security->q == doctest::Approx(kDefaultPowerFloor));
    const long grid_rows = std::count_if(rows.begin(), rows.end(), [](const TradeoffRow& r) { return r.label == "grid"; });
    CHECK(grid_rows == 4);
  }
}
