#pragma once

#include <span>

#include "afshape/types.hpp"

namespace afs::dsp {

/// Forward DFT, X[n] = sum_k x[k] exp(-j 2 pi n k / N).
CVector dft(const CVector& x);

/// Un-normalized inverse DFT, x[k] = sum_n X[n] exp(+j 2 pi n k / N).
CVector idft_sum(const CVector& spectrum);

/// Unitary inverse DFT (1/sqrt(N) scaling), i.e. F_N^H applied to the spectrum.
CVector idft_unitary(const CVector& spectrum);

/// Neumaier compensated accumulator; keeps reductions order-stable to ~1 ulp.
class CompensatedSum {
 public:
  void add(double v);
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_sum(std::span<const double> values);

/// Circular distance between two positions on a ring of circumference `period`.
double circular_distance(double a, double b, double period);

}  // namespace afs::dsp
