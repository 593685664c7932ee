#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>

#include <Eigen/Dense>

namespace afs {

using cd = std::complex<double>;

using RVector = Eigen::VectorXd;
using CVector = Eigen::VectorXcd;
/// Row-major so that one OFDM symbol (one row) is contiguous.
using CMatrix = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Propagation speed used for every range/delay conversion. The rounded value
/// makes R_max = cN/(2B) come out at exactly 768 m for N=256, B=50 MHz.
inline constexpr double kSpeedOfLight = 3.0e8;

inline constexpr double kPi = 3.14159265358979323846;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// 10*log10(x); returns -inf for x == 0.
inline double linear_to_db(double x) {
  if (x <= 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(x);
}

}  // namespace afs
