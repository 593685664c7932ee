#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "afshape/types.hpp"

namespace afs {

/// A unit-average-power symbol alphabet together with the two moments that
/// drive every closed form in the library:
///   mu4   = E|s|^4   (kurtosis; sets the random-signaling sidelobe floor)
///   nu_m2 = E|s|^-2  (inverse second moment; sets reciprocal-filter noise gain)
struct Constellation {
  std::string name;
  std::vector<cd> points;
  double mu4 = 1.0;
  double nu_m2 = 1.0;

  std::size_t size() const { return points.size(); }
};

/// Builds QPSK, 16QAM or 64QAM (Gray-ordered square grids, unit mean power).
/// Throws NameError for anything else.
Constellation make_constellation(std::string_view name);

/// Normalizes an arbitrary alphabet to unit mean power and computes its moments.
/// Throws ConfigError on an empty alphabet or a zero-amplitude point.
Constellation make_custom_constellation(std::string name, std::vector<cd> points);

/// M_sym x N block of i.i.d. uniform draws from one constellation.
struct SymbolBlock {
  CMatrix symbols;
  std::uint64_t seed = 0;

  Eigen::Index num_symbols() const { return symbols.rows(); }
  Eigen::Index num_subcarriers() const { return symbols.cols(); }
};

SymbolBlock draw_symbols(const Constellation& c, Eigen::Index m_sym, Eigen::Index n,
                         std::uint64_t seed);

}  // namespace afs
