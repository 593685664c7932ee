#include <algorithm>
#include <cmath>

#include "afshape/constellation.hpp"
#include "afshape/errors.hpp"
#include "afshape/estimation.hpp"
#include "afshape/rng.hpp"
#include "afshape/waveform.hpp"
#include "doctest.h"

using namespace afs;

namespace {

CMatrix repeated_channel(const RadarScene& scene, const OfdmGrid& g, int rows, double noise_var,
                         std::uint64_t seed) {
  const CVector h = channel_vector(scene, g);
  CMatrix est(rows, g.n);
  Rng rng(seed);
  for (int m = 0; m < rows; ++m) {
    for (int n = 0; n < g.n; ++n) est(m, n) = h[n] + (noise_var > 0 ? rng.complex_normal(noise_var) : cd(0, 0));
  }
  return est;
}

RadarScene two_targets(const OfdmGrid& g, double r1, double r2) {
  RadarScene s;
  s.reflectors.push_back(reflector_at_range(g, r1, 1.0, 1.0, ReflectorKind::Target, 0.4));
  s.reflectors.push_back(reflector_at_range(g, r2, 0.3, 1.0, ReflectorKind::Target, 2.2));
  return s;
}

}  // namespace

TEST_SUITE("estimation") {
  TEST_CASE("noiseless ranges are recovered exactly") {
    const OfdmGrid g;
    for (auto method : {RootingMethod::Newton, RootingMethod::Companion}) {
      MusicConfig cfg;
      cfg.rooting = method;
      for (auto [r1, r2] : {std::pair{37.3, 121.9}, std::pair{10.0, 25.5}, std::pair{150.2, 179.0}}) {
        const auto est = root_music_ranges(repeated_channel(two_targets(g, r1, r2), g, 4, 0.0, 0), cfg, g);
        REQUIRE(est.size() == 2);
        CHECK(std::abs(est[0] - r1) < 1e-6);
        CHECK(std::abs(est[1] - r2) < 1e-6);
      }
    }
  }

  TEST_CASE("Newton and companion rooting agree on noisy data") {
    const OfdmGrid g;
    Rng pick(2025);
    for (int c = 0; c < 20; ++c) {
      const double r1 = 10.0 + 170.0 * pick.uniform();
      double r2 = 10.0 + 170.0 * pick.uniform();
      if (std::abs(r1 - r2) < 15.0) r2 = r1 > 95.0 ? r1 - 40.0 : r1 + 40.0;
      const CMatrix est = repeated_channel(two_targets(g, r1, r2), g, 8, 0.5, derive_seed(99, c));
      MusicConfig newton, companion;
      companion.rooting = RootingMethod::Companion;
      const auto a = root_music_ranges(est, newton, g);
      const auto b = root_music_ranges(est, companion, g);
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) < 1e-6);
    }
  }

  TEST_CASE("smoothed covariance is Hermitian and persymmetric") {
    const OfdmGrid g;
    const CMatrix est = repeated_channel(two_targets(g, 50.0, 90.0), g, 4, 1.0, 3);
    MusicConfig cfg;
    const CMatrix r = smoothed_covariance(est, cfg);
    const int l = cfg.resolved_subarray(g.n);
    REQUIRE(r.rows() == l);
    CHECK((r - r.adjoint()).cwiseAbs().maxCoeff() < 1e-9 * r.cwiseAbs().maxCoeff());
    // Forward-backward averaging: J conj(R) J = R.
    const CMatrix flipped = r.conjugate().reverse();
    CHECK((flipped - r).cwiseAbs().maxCoeff() < 1e-9 * r.cwiseAbs().maxCoeff());
    const CVector c = noise_polynomial(r, 2);
    REQUIRE(c.size() == 2 * l - 1);
    for (int k = 0; k < l; ++k) CHECK(std::abs(c[l - 1 + k] - std::conj(c[l - 1 - k])) < 1e-9);
  }

  TEST_CASE("degenerate inputs") {
    const OfdmGrid g;
    CHECK_THROWS_AS(root_music_ranges(CMatrix::Zero(2, g.n), MusicConfig{}, g), EstimationError);
    CHECK_THROWS_AS(root_music_ranges(CMatrix::Zero(2, 10), MusicConfig{}, g), LengthError);
    MusicConfig bad;
    bad.subarray_len = 1;
    CHECK_THROWS_AS(smoothed_covariance(CMatrix::Ones(2, 16), bad), ConfigError);
  }

  TEST_CASE("assignment of estimates to truths") {
    const auto e = assignment_errors({10.0, 50.0}, {52.0, 11.0}, 768.0);
    REQUIRE(e.size() == 2);
    CHECK(e[0] == doctest::Approx(2.0));
    CHECK(e[1] == doctest::Approx(1.0));
    const auto wrap = assignment_errors({767.0}, {1.0}, 768.0);
    CHECK(wrap[0] == doctest::Approx(2.0));
    const auto missing = assignment_errors({100.0}, {100.0, 300.0}, 768.0);
    CHECK(missing[0] == doctest::Approx(0.0));
    CHECK(missing[1] == doctest::Approx(384.0));
    // The joint optimum can leave one truth worse than its nearest estimate.
    const auto joint = assignment_errors({0.0, 10.0}, {9.0, 20.0}, 768.0);
    CHECK(joint[0] == doctest::Approx(9.0));
    CHECK(joint[1] == doctest::Approx(10.0));
  }

  TEST_CASE("two-target scene sampler") {
    const OfdmGrid g;
    const auto sampler = two_target_sampler(g, 100.0, db_to_linear(4.0), db_to_linear(6.0));
    Rng rng(2025);
    for (int t = 0; t < 200; ++t) {
      const SampledScene s = sampler(rng, 2.0);
      REQUIRE(s.true_ranges_m.size() == 2);
      for (double r : s.true_ranges_m) {
        CHECK(r >= 10.0);
        CHECK(r <= 180.0);
      }
      CHECK(std::abs(s.true_ranges_m[0] - s.true_ranges_m[1]) >= 15.0);
      const double strong = std::norm(s.scene.reflectors[0].amplitude);
      const double weak = std::norm(s.scene.reflectors[1].amplitude);
      CHECK(strong == doctest::Approx(200.0));
      const double gap_db = linear_to_db(strong / weak);
      CHECK(gap_db >= 4.0 - 1e-9);
      CHECK(gap_db <= 6.0 + 1e-9);
      CHECK_NOTHROW(s.scene.validate(g));
    }
  }

  TEST_CASE("high-SNR two-target RMSE with the plain waveform") {
    RmseScenario sc;
    sc.setup.constellation = make_constellation("16QAM");
    sc.setup.alloc = equal_allocation(sc.setup.grid.n);
    sc.setup.eve_ref = RicianRef::from_sinr(1.0, 10.0);
    sc.sampler = two_target_sampler(sc.setup.grid, db_to_linear(-10.0), db_to_linear(4.0), db_to_linear(6.0));
    const RmseReport r = rmse_experiment(sc, 30, 2025, 1);
    CHECK(r.trials == 30);
    CHECK(r.rmse_alice_m < 3.0);
    CHECK(std::abs(r.gap_m) < 10.0);
    CHECK(r.eve_replica_lock_fraction == 0.0);
    const RmseReport again = rmse_experiment(sc, 30, 2025, 4);
    CHECK(again.rmse_alice_m == r.rmse_alice_m);
    CHECK(again.rmse_eve_m == r.rmse_eve_m);
  }
}
