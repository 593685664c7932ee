#include <cmath>

#include "afshape/constellation.hpp"
#include "afshape/errors.hpp"
#include "afshape/rng.hpp"
#include "afshape/scene.hpp"
#include "afshape/waveform.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace afs;

TEST_SUITE("scene_channel") {
  TEST_CASE("grid constants") {
    const OfdmGrid g;  // N = 256, N_cp = 64, B = 50 MHz
    CHECK(g.r_max_m() == 768.0);
    CHECK(g.r_max_cp_m() == 192.0);
    CHECK(g.bin_range_m() == doctest::Approx(3.0));
    CHECK(g.delta_f_hz() == doctest::Approx(195312.5));
    CHECK(g.bin_for_range(99.0) == doctest::Approx(33.0));
    CHECK(g.range_for_delay(g.delay_for_range(123.4)) == doctest::Approx(123.4));
  }

  TEST_CASE("steering vector") {
    const OfdmGrid g;
    const double tau = g.delay_for_range(47.5);
    const CVector r = steering(tau, g);
    REQUIRE(r.size() == g.n);
    for (int n = 0; n < g.n; ++n) {
      const oracle::cd expect = std::polar(1.0, -2.0 * oracle::pi * n * g.delta_f_hz() * tau);
      CHECK(std::abs(r[n] - expect) < 1e-12);
    }
    CHECK_THROWS_AS(steering(-1e-9, g), ConfigError);
  }

  TEST_CASE("channel is linear in the reflectors") {
    const OfdmGrid g;
    RadarScene a, b, both;
    a.reflectors.push_back(reflector_at_range(g, 30.0, 10.0, 1.0, ReflectorKind::Clutter, 0.3));
    b.reflectors.push_back(reflector_at_range(g, 100.0, 0.5, 1.0, ReflectorKind::Target, 1.1));
    both.reflectors = {a.reflectors[0], b.reflectors[0]};
    const CVector sum = channel_vector(a, g) + channel_vector(b, g);
    CHECK((channel_vector(both, g) - sum).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(std::norm(a.reflectors[0].amplitude) == doctest::Approx(10.0));
    CHECK(std::arg(b.reflectors[0].amplitude) == doctest::Approx(1.1));
  }

  TEST_CASE("cyclic-prefix region is enforced") {
    const OfdmGrid g;
    RadarScene s;
    s.reflectors.push_back(reflector_at_range(g, 180.0, 1.0, 1.0));
    CHECK_NOTHROW(s.validate(g));
    s.reflectors.push_back(reflector_at_range(g, 200.0, 1.0, 1.0));
    CHECK_THROWS_AS(s.validate(g), IsiRegionError);
  }

  TEST_CASE("noiseless snapshot is the channel times the transmit block") {
    OfdmGrid g;
    g.n = 64;
    g.n_cp = 16;
    g.m_sym = 3;
    const Constellation c = make_constellation("16QAM");
    const PowerAllocation a = structured_allocation(SecureAcfSpec{0.5, 3}, 64);
    const SymbolBlock blk = draw_symbols(c, 3, 64, 4);
    RadarScene s;
    s.reflectors.push_back(reflector_at_range(g, 21.0, 2.0, 1.0));
    const CMatrix y = sensing_snapshot(s, g, a, blk, 0.0, 1);
    const CVector h = channel_vector(s, g);
    for (int m = 0; m < 3; ++m) {
      for (int n = 0; n < 64; ++n) {
        const oracle::cd x = std::sqrt(a.power[n]) * blk.symbols(m, n);
        CHECK(std::abs(y(m, n) - h[n] * x) < 1e-12);
      }
    }
  }

  TEST_CASE("noise block variance") {
    const CMatrix z = noise_block(64, 256, 2.5, 2025);
    const double p = z.cwiseAbs2().mean();
    CHECK(p == doctest::Approx(2.5).epsilon(0.03));
    CHECK(std::abs(z.real().cwiseAbs2().mean() - 1.25) < 0.04);
    CHECK(noise_block(4, 4, 1.0, 9) == noise_block(4, 4, 1.0, 9));
  }

  TEST_CASE("Rician reference SINR bookkeeping") {
    const RicianRef r = RicianRef::from_sinr(db_to_linear(0.0), 10.0);
    CHECK(r.reference_sinr() == doctest::Approx(1.0));
    CHECK(r.los_fraction() == doctest::Approx(10.0 / 11.0));
    CHECK_THROWS_AS(RicianRef::from_sinr(db_to_linear(15.0), 10.0), ConfigError);
    const RicianRef pure = RicianRef::from_sinr(db_to_linear(30.0), std::numeric_limits<double>::infinity());
    CHECK(pure.los_fraction() == doctest::Approx(1.0));
    CHECK(pure.noise_var == doctest::Approx(1e-3));
  }

  TEST_CASE("empirical reference SINR matches the requested value") {
    OfdmGrid g;
    const Constellation c = make_constellation("16QAM");
    const PowerAllocation a = equal_allocation(g.n);
    for (double sinr_db : {-5.0, 0.0, 5.0}) {
      const RicianRef ref = RicianRef::from_sinr(db_to_linear(sinr_db), 10.0, 1.0, NlosCoherence::PerSymbol);
      const SymbolBlock blk = draw_symbols(c, 64, g.n, 17);
      const CMatrix x = transmit_block(a, blk);
      const CMatrix y = eve_reference(a, blk, ref, 23);
      const double los_amp = std::sqrt(ref.los_fraction());
      const double signal = los_amp * los_amp * x.cwiseAbs2().mean();
      const double residual = (y - los_amp * x).cwiseAbs2().mean();
      CHECK(std::abs(linear_to_db(signal / residual) - sinr_db) <= 0.2);
    }
  }

  TEST_CASE("communication rate") {
    const OfdmGrid g;
    const CommChannel ch = flat_channel(g.n, db_to_linear(10.0));
    const double r = comm_rate(ch, equal_allocation(g.n), g);
    CHECK(r == doctest::Approx(50e6 * std::log2(11.0)).epsilon(1e-12));
    CHECK(r / 1e6 == doctest::Approx(172.97).epsilon(1e-4));
    // Concavity: any comb carries less than equal power on a flat channel.
    const double comb = comm_rate(ch, structured_allocation(SecureAcfSpec{0.5, 3}, g.n), g);
    CHECK(comb < r);
    CHECK_THROWS_AS(comm_rate(ch, equal_allocation(64), g), LengthError);
  }

  TEST_CASE("Rayleigh channel statistics") {
    const CommChannel ch = rayleigh_channel(8192, 10.0, 2025);
    CHECK(ch.snr_per_unit_power().mean() == doctest::Approx(10.0).epsilon(0.05));
    CHECK(ch.gains.real().mean() == doctest::Approx(0.0).scale(1.0).epsilon(0.1));
    CHECK(rayleigh_channel(16, 1.0, 3).gains == rayleigh_channel(16, 1.0, 3).gains);
  }
}
