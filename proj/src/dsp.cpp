#include "afshape/dsp.hpp"

#include <cmath>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace afs::dsp {

namespace {

// kissfft plans are cached per instance; one instance per thread keeps the
// transforms reentrant.
Eigen::FFT<double>& engine() {
  thread_local Eigen::FFT<double> fft = [] {
    Eigen::FFT<double> f;
    f.SetFlag(Eigen::FFT<double>::Unscaled);
    return f;
  }();
  return fft;
}

}  // namespace

CVector dft(const CVector& x) {
  std::vector<cd> in(x.data(), x.data() + x.size());
  std::vector<cd> out;
  engine().fwd(out, in);
  return Eigen::Map<const CVector>(out.data(), static_cast<Eigen::Index>(out.size()));
}

CVector idft_sum(const CVector& spectrum) {
  std::vector<cd> in(spectrum.data(), spectrum.data() + spectrum.size());
  std::vector<cd> out;
  engine().inv(out, in);
  return Eigen::Map<const CVector>(out.data(), static_cast<Eigen::Index>(out.size()));
}

CVector idft_unitary(const CVector& spectrum) {
  return idft_sum(spectrum) / std::sqrt(static_cast<double>(spectrum.size()));
}

void CompensatedSum::add(double v) {
  const double t = sum_ + v;
  if (std::abs(sum_) >= std::abs(v)) {
    comp_ += (sum_ - t) + v;
  } else {
    comp_ += (v - t) + sum_;
  }
  sum_ = t;
}

double compensated_sum(std::span<const double> values) {
  CompensatedSum acc;
  for (double v : values) acc.add(v);
  return acc.value();
}

double circular_distance(double a, double b, double period) {
  double d = std::fmod(std::abs(a - b), period);
  return std::min(d, period - d);
}

}  // namespace afs::dsp
