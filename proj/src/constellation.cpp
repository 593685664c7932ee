#include "afshape/constellation.hpp"

#include <cmath>

#include "afshape/dsp.hpp"
#include "afshape/errors.hpp"
#include "afshape/rng.hpp"

namespace afs {

namespace {

unsigned gray(unsigned v) { return v ^ (v >> 1); }

// Square M-QAM with Gray-coded I/Q rails. Point index b = (i_bits << half) | q_bits.
std::vector<cd> square_qam(unsigned bits_per_axis) {
  const unsigned side = 1u << bits_per_axis;
  std::vector<double> level(side);
  for (unsigned i = 0; i < side; ++i) {
    // Gray label g maps to amplitude level -(side-1) + 2*i.
    level[gray(i)] = -static_cast<double>(side - 1) + 2.0 * i;
  }
  std::vector<cd> pts;
  pts.reserve(static_cast<std::size_t>(side) * side);
  for (unsigned ib = 0; ib < side; ++ib) {
    for (unsigned qb = 0; qb < side; ++qb) {
      pts.emplace_back(level[ib], level[qb]);
    }
  }
  return pts;
}

}  // namespace

Constellation make_custom_constellation(std::string name, std::vector<cd> points) {
  if (points.empty()) throw ConfigError("constellation '" + name + "' has no points");
  std::vector<double> power(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    power[i] = std::norm(points[i]);
    if (power[i] == 0.0) {
      throw ConfigError("constellation '" + name + "' contains a zero-amplitude point");
    }
  }
  const double m = static_cast<double>(points.size());
  const double scale = std::sqrt(dsp::compensated_sum(power) / m);
  for (auto& p : points) p /= scale;

  std::vector<double> p4(points.size()), pinv(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    const double a2 = std::norm(points[i]);
    p4[i] = a2 * a2;
    pinv[i] = 1.0 / a2;
  }
  Constellation c;
  c.name = std::move(name);
  c.points = std::move(points);
  c.mu4 = dsp::compensated_sum(p4) / m;
  c.nu_m2 = dsp::compensated_sum(pinv) / m;
  return c;
}

Constellation make_constellation(std::string_view name) {
  if (name == "QPSK") {
    // Unit-modulus alphabet: moments are exactly one, no normalization error.
    const double r = std::sqrt(0.5);
    Constellation c;
    c.name = "QPSK";
    c.points = {{r, r}, {r, -r}, {-r, r}, {-r, -r}};
    c.mu4 = 1.0;
    c.nu_m2 = 1.0;
    return c;
  }
  if (name == "16QAM") return make_custom_constellation("16QAM", square_qam(2));
  if (name == "64QAM") return make_custom_constellation("64QAM", square_qam(3));
  throw NameError("unknown constellation '" + std::string(name) +
                  "' (expected QPSK, 16QAM or 64QAM)");
}

SymbolBlock draw_symbols(const Constellation& c, Eigen::Index m_sym, Eigen::Index n,
                         std::uint64_t seed) {
  if (m_sym < 1 || n < 1) throw ConfigError("draw_symbols needs m_sym >= 1 and n >= 1");
  Rng rng(seed);
  SymbolBlock block;
  block.seed = seed;
  block.symbols.resize(m_sym, n);
  for (Eigen::Index m = 0; m < m_sym; ++m) {
    for (Eigen::Index k = 0; k < n; ++k) {
      block.symbols(m, k) = c.points[rng.uniform_index(c.size())];
    }
  }
  return block;
}

}  // namespace afs
