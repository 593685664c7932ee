#include "afshape/receivers.hpp"

#include <cmath>

#include "afshape/dsp.hpp"
#include "afshape/errors.hpp"

namespace afs {

namespace {

void check_same_shape(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw LengthError("receiver inputs have mismatched shapes");
  }
}

}  // namespace

const char* to_string(ReceiverKind k) { return k == ReceiverKind::MF ? "MF" : "RF"; }
const char* to_string(Observer o) { return o == Observer::Alice ? "Alice" : "Eve"; }

CMatrix alice_mf_spectrum(const CMatrix& snapshot, const CMatrix& transmit) {
  check_same_shape(snapshot, transmit);
  return (snapshot.array() * transmit.array().conjugate()).matrix();
}

CMatrix alice_rf_spectrum(const CMatrix& snapshot, const CMatrix& transmit) {
  check_same_shape(snapshot, transmit);
  return (snapshot.array() / transmit.array()).matrix();
}

CMatrix eve_mf_spectrum(const CMatrix& surveillance, const CMatrix& reference) {
  check_same_shape(surveillance, reference);
  return (surveillance.array() * reference.array().conjugate()).matrix();
}

CMatrix eve_rf_spectrum(const CMatrix& surveillance, const CMatrix& reference) {
  check_same_shape(surveillance, reference);
  return (surveillance.array() / reference.array()).matrix();
}

RVector range_axis(const OfdmGrid& grid) {
  RVector axis(grid.n);
  for (int k = 0; k < grid.n; ++k) axis[k] = k * grid.bin_range_m();
  return axis;
}

std::vector<RangeProfile> range_profiles(const CMatrix& filtered, const OfdmGrid& grid,
                                         ReceiverKind kind, Observer who) {
  if (filtered.cols() != grid.n) throw LengthError("filtered block width does not match the grid");
  std::vector<RangeProfile> out;
  out.reserve(static_cast<std::size_t>(filtered.rows()));
  const RVector axis = range_axis(grid);
  for (Eigen::Index m = 0; m < filtered.rows(); ++m) {
    out.push_back({dsp::idft_unitary(filtered.row(m).transpose()), axis, kind, who});
  }
  return out;
}

std::vector<RangeProfile> alice_mf(const CMatrix& snapshot, const PowerAllocation& alloc,
                                   const SymbolBlock& symbols, const OfdmGrid& grid) {
  return range_profiles(alice_mf_spectrum(snapshot, transmit_block(alloc, symbols)), grid,
                        ReceiverKind::MF, Observer::Alice);
}

std::vector<RangeProfile> alice_rf(const CMatrix& snapshot, const PowerAllocation& alloc,
                                   const SymbolBlock& symbols, const OfdmGrid& grid) {
  return range_profiles(alice_rf_spectrum(snapshot, transmit_block(alloc, symbols)), grid,
                        ReceiverKind::RF, Observer::Alice);
}

std::vector<RangeProfile> eve_mf(const CMatrix& surveillance, const CMatrix& reference,
                                 const OfdmGrid& grid) {
  return range_profiles(eve_mf_spectrum(surveillance, reference), grid, ReceiverKind::MF,
                        Observer::Eve);
}

std::vector<RangeProfile> eve_rf(const CMatrix& surveillance, const CMatrix& reference,
                                 const OfdmGrid& grid) {
  return range_profiles(eve_rf_spectrum(surveillance, reference), grid, ReceiverKind::RF,
                        Observer::Eve);
}

RangeProfile integrated_profile(const CMatrix& filtered, const OfdmGrid& grid, ReceiverKind kind,
                                Observer who) {
  if (filtered.cols() != grid.n) throw LengthError("filtered block width does not match the grid");
  const CVector summed = filtered.colwise().sum().transpose();
  return {dsp::idft_unitary(summed), range_axis(grid), kind, who};
}

RangeDopplerMap rd_map(const CMatrix& filtered, const OfdmGrid& grid, ReceiverKind kind,
                       Observer who) {
  const auto profiles = range_profiles(filtered, grid, kind, who);
  const auto m_sym = static_cast<Eigen::Index>(profiles.size());
  RangeDopplerMap map;
  map.receiver = kind;
  map.who = who;
  map.range_axis_m = range_axis(grid);
  map.cells.resize(grid.n, m_sym);
  CVector slow(m_sym);
  for (int k = 0; k < grid.n; ++k) {
    for (Eigen::Index m = 0; m < m_sym; ++m) slow[m] = profiles[m].bins[k];
    map.cells.row(k) = dsp::dft(slow).transpose();
  }
  map.doppler_axis_hz.resize(m_sym);
  const double prf = 1.0 / grid.symbol_duration_s();
  for (Eigen::Index d = 0; d < m_sym; ++d) {
    const double signed_bin = (d < (m_sym + 1) / 2) ? d : d - m_sym;
    map.doppler_axis_hz[d] = signed_bin * prf / m_sym;
  }
  return map;
}

double snr_loss_closed_form(const PowerAllocation& alloc, const Constellation& c) {
  std::vector<double> inv(alloc.n());
  for (int i = 0; i < alloc.n(); ++i) inv[i] = 1.0 / alloc.power[i];
  return c.nu_m2 / alloc.n() * dsp::compensated_sum(inv);
}

std::vector<bool> noise_bin_mask(int n, const std::vector<int>& target_bins, int kappa) {
  std::vector<bool> mask(n, true);
  const int stride = kappa > 1 ? n / kappa : n;
  for (int t : target_bins) {
    for (int rep = 0; rep < std::max(kappa, 1); ++rep) {
      const int centre = t + rep * stride;
      for (int d = -1; d <= 1; ++d) mask[((centre + d) % n + n) % n] = false;
    }
  }
  return mask;
}

OutputSnrEstimator::OutputSnrEstimator(int target_bin, std::vector<bool> noise_mask)
    : target_bin_(target_bin), mask_(std::move(noise_mask)) {}

void OutputSnrEstimator::accumulate_noise(const CVector& v) {
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (!mask_[k]) continue;
    noise_.add(std::norm(v[k]));
    ++noise_cells_;
  }
}

void OutputSnrEstimator::add(const CVector& profile) {
  sig_re_.add(profile[target_bin_].real());
  sig_im_.add(profile[target_bin_].imag());
  accumulate_noise(profile);
  ++count_;
}

void OutputSnrEstimator::add(const CVector& profile, const CVector& noise_only) {
  sig_re_.add(profile[target_bin_].real());
  sig_im_.add(profile[target_bin_].imag());
  accumulate_noise(noise_only);
  ++count_;
}

double OutputSnrEstimator::signal_power() const {
  if (count_ == 0) return 0.0;
  return std::norm(cd(sig_re_.value(), sig_im_.value()) / static_cast<double>(count_));
}

double OutputSnrEstimator::noise_power() const {
  if (noise_cells_ == 0) return 0.0;
  return noise_.value() / static_cast<double>(noise_cells_);
}

SnrReport make_snr_report(double gamma_mf, double gamma_rf) {
  SnrReport r;
  r.gamma_mf_db = linear_to_db(gamma_mf);
  r.gamma_rf_db = linear_to_db(gamma_rf);
  r.loss_db = r.gamma_mf_db - r.gamma_rf_db;
  return r;
}

}  // namespace afs
