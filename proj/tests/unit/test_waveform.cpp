#include <cmath>
#include <vector>

#include "afshape/errors.hpp"
#include "afshape/waveform.hpp"
#include "doctest.h"

using namespace afs;

namespace {

struct Case {
  double alpha_frac;
  int num_peaks;
  double p;
  double q;
  int kappa;
};

// (alpha/N, L) triples of the three reference combs with their (p, q, kappa).
const std::vector<Case> kCombs = {
    {0.75, 3, 3.25, 0.25, 4},
    {0.5, 3, 2.5, 0.5, 4},
    {0.25, 7, 2.75, 0.75, 8},
};

}  // namespace

TEST_SUITE("waveform") {
  TEST_CASE("comb parameterization") {
    for (const auto& c : kCombs) {
      const SecureAcfSpec spec{c.alpha_frac, c.num_peaks};
      CHECK(spec.p() == doctest::Approx(c.p));
      CHECK(spec.q() == doctest::Approx(c.q));
      CHECK(spec.kappa() == c.kappa);
      const SecureAcfSpec back = SecureAcfSpec::from_kappa_q(c.kappa, c.q);
      CHECK(back.alpha_frac == doctest::Approx(c.alpha_frac));
      CHECK(back.num_peaks == c.num_peaks);
    }
  }

  TEST_CASE("comb allocation layout") {
    const SecureAcfSpec spec{0.75, 3};
    for (int n0 = 1; n0 <= 4; ++n0) {
      const PowerAllocation a = structured_allocation(spec, 64, n0);
      REQUIRE(a.n() == 64);
      CHECK(a.power.sum() == doctest::Approx(64.0).epsilon(1e-12));
      std::vector<bool> dominant(64, false);
      for (int i = n0 - 1; i < 64; i += 4) dominant[i] = true;
      for (int i = 0; i < 64; ++i) {
        CHECK(a.power[i] == doctest::Approx(dominant[i] ? 3.25 : 0.25));
        CHECK(in_dominant_set(i, 4, n0) == dominant[i]);
      }
      REQUIRE(a.structure.has_value());
      CHECK(a.structure->n0 == n0);
    }
  }

  TEST_CASE("invalid comb requests") {
    CHECK_THROWS_AS(structured_allocation(SecureAcfSpec{0.5, 2}, 64), DivisibilityError);
    CHECK_THROWS_AS(structured_allocation(SecureAcfSpec{0.5, 3}, 64, 5), ConfigError);
    CHECK_THROWS_AS(structured_allocation(SecureAcfSpec{1.2, 3}, 64), ConfigError);
    // q = 1 - 0.99995 sits below the default floor.
    CHECK_THROWS_AS(structured_allocation(SecureAcfSpec{0.99995, 3}, 64), FloorError);
  }

  TEST_CASE("allocation validation") {
    PowerAllocation ok = equal_allocation(16);
    CHECK_NOTHROW(validate_allocation(ok));
    PowerAllocation low = ok;
    low.power[3] = 0.0;
    low.power[4] = 2.0;
    CHECK_THROWS_AS(validate_allocation(low), FloorError);
    PowerAllocation wrong_total = ok;
    wrong_total.power[0] = 2.0;
    CHECK_THROWS_AS(validate_allocation(wrong_total), ConfigError);
  }

  TEST_CASE("comb and allocation are a DFT pair") {
    // Property: ideal ACF -> powers -> comb reproduces the structured
    // allocation to 1e-9 for every valid (kappa, q) on a grid.
    for (int n : {16, 64, 256}) {
      for (int kappa = 2; kappa <= n / 2; kappa *= 2) {
        for (double q : {0.01, 0.25, 0.5, 0.9}) {
          const SecureAcfSpec spec = SecureAcfSpec::from_kappa_q(kappa, q);
          const RVector comb = secure_comb(spec, n);
          const PowerAllocation direct = structured_allocation(spec, n);
          const PowerAllocation back = ideal_acf_to_allocation(comb);
          REQUIRE(back.n() == n);
          CHECK((back.power - direct.power).cwiseAbs().maxCoeff() < 1e-9);
          REQUIRE(back.structure.has_value());
          CHECK(back.structure->kappa == kappa);
          CHECK(back.structure->q == doctest::Approx(q).epsilon(1e-9));
        }
      }
    }
  }

  TEST_CASE("comb shape") {
    const RVector comb = secure_comb(SecureAcfSpec{0.5, 3}, 64);
    for (int k = 0; k < 64; ++k) {
      const double expect = k == 0 ? 64.0 : (k % 16 == 0 ? 32.0 : 0.0);
      CHECK(comb[k] == doctest::Approx(expect).epsilon(1e-12));
    }
  }

  TEST_CASE("non-realizable ACF is rejected") {
    RVector acf = RVector::Zero(32);
    acf[0] = 32.0;
    acf[1] = 0.9 * 32.0;
    acf[31] = 0.9 * 32.0;
    CHECK_THROWS_AS(ideal_acf_to_allocation(acf), InfeasibleAcfError);
  }

  TEST_CASE("stochastic allocation") {
    const SecureAcfSpec spec{0.75, 3};
    const PowerAllocation a = stochastic_allocation(spec, 64, 1, 0.05, 2025);
    const PowerAllocation b = stochastic_allocation(spec, 64, 1, 0.05, 2025);
    const PowerAllocation c = stochastic_allocation(spec, 64, 1, 0.05, 2026);
    CHECK(a.power == b.power);
    CHECK(a.power != c.power);
    CHECK(a.power.sum() == doctest::Approx(64.0).epsilon(1e-12));
    CHECK(a.power.minCoeff() >= kDefaultPowerFloor);
    REQUIRE(a.structure.has_value());
    CHECK(a.structure->jitter == 0.05);
    const PowerAllocation exact = stochastic_allocation(spec, 64, 1, 0.0, 1);
    CHECK(exact.power == structured_allocation(spec, 64).power);
    CHECK_THROWS_AS(stochastic_allocation(spec, 64, 1, -0.1, 1), ConfigError);
    CHECK_THROWS_AS(stochastic_allocation(spec, 64, 1, 1.0, 2025), FloorError);
  }
}
