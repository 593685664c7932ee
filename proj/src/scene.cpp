#include "afshape/scene.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

#include "afshape/dsp.hpp"
#include "afshape/errors.hpp"
#include "afshape/rng.hpp"

namespace afs {

Reflector reflector_at_range(const OfdmGrid& grid, double range_m, double snr, double noise_var,
                             ReflectorKind kind, double phase_rad) {
  const double mag = std::sqrt(snr * noise_var);
  return Reflector{std::polar(mag, phase_rad), grid.delay_for_range(range_m), kind};
}

void RadarScene::validate(const OfdmGrid& grid) const {
  const double max_delay = static_cast<double>(grid.n_cp) / grid.bandwidth_hz;
  for (std::size_t i = 0; i < reflectors.size(); ++i) {
    const double d = reflectors[i].delay_s;
    if (!(d >= 0.0)) throw ConfigError("reflector delay must be non-negative");
    if (d > max_delay * (1.0 + 1e-12)) {
      std::ostringstream os;
      os << "reflector " << i << " at " << grid.range_for_delay(d) << " m lies beyond the "
         << grid.r_max_cp_m() << " m ISI-free region";
      throw IsiRegionError(os.str());
    }
  }
}

CVector steering(double delay_s, const OfdmGrid& grid) {
  if (delay_s < 0.0) throw ConfigError("steering delay must be non-negative");
  CVector r(grid.n);
  const double step = -2.0 * kPi * grid.delta_f_hz() * delay_s;
  for (int k = 0; k < grid.n; ++k) r[k] = std::polar(1.0, step * k);
  return r;
}

CVector channel_vector(const RadarScene& scene, const OfdmGrid& grid) {
  CVector h = CVector::Zero(grid.n);
  for (const auto& r : scene.reflectors) h += r.amplitude * steering(r.delay_s, grid);
  return h;
}

CMatrix transmit_block(const PowerAllocation& alloc, const SymbolBlock& symbols) {
  if (symbols.num_subcarriers() != alloc.n()) {
    throw LengthError("symbol block width does not match the allocation");
  }
  const RVector w = alloc.amplitudes();
  CMatrix x = symbols.symbols;
  for (Eigen::Index m = 0; m < x.rows(); ++m) x.row(m).array() *= w.transpose().array();
  return x;
}

CMatrix noise_block(Eigen::Index rows, Eigen::Index cols, double noise_var, std::uint64_t seed) {
  CMatrix z(rows, cols);
  if (noise_var <= 0.0) {
    z.setZero();
    return z;
  }
  Rng rng(seed);
  for (Eigen::Index m = 0; m < rows; ++m) {
    for (Eigen::Index k = 0; k < cols; ++k) z(m, k) = rng.complex_normal(noise_var);
  }
  return z;
}

CMatrix sensing_snapshot(const RadarScene& scene, const OfdmGrid& grid,
                         const PowerAllocation& alloc, const SymbolBlock& symbols,
                         double noise_var, std::uint64_t seed) {
  scene.validate(grid);
  if (alloc.n() != grid.n) throw LengthError("allocation length does not match the grid");
  const CVector h = channel_vector(scene, grid);
  CMatrix y = transmit_block(alloc, symbols);
  for (Eigen::Index m = 0; m < y.rows(); ++m) y.row(m).array() *= h.transpose().array();
  if (noise_var > 0.0) y += noise_block(y.rows(), y.cols(), noise_var, seed);
  return y;
}

double RicianRef::los_fraction() const {
  if (std::isinf(k_factor)) return 1.0;
  return k_factor / (k_factor + 1.0);
}

double RicianRef::reference_sinr() const {
  const double los = gain * los_fraction();
  const double nlos = gain * (1.0 - los_fraction());
  const double denom = nlos + noise_var;
  if (denom <= 0.0) return std::numeric_limits<double>::infinity();
  return los / denom;
}

RicianRef RicianRef::from_sinr(double sinr, double k_factor, double gain,
                               NlosCoherence coherence) {
  if (!(sinr > 0.0)) throw ConfigError("reference SINR must be positive");
  if (k_factor < 0.0) throw ConfigError("Rician K-factor must be non-negative");
  RicianRef ref;
  ref.k_factor = k_factor;
  ref.gain = gain;
  ref.coherence = coherence;
  const double los = gain * ref.los_fraction();
  const double nlos = gain * (1.0 - ref.los_fraction());
  const double noise = los / sinr - nlos;
  if (noise < -1e-12 * gain) {
    std::ostringstream os;
    os << "reference SINR " << linear_to_db(sinr) << " dB exceeds the K-factor limit "
       << linear_to_db(k_factor) << " dB";
    throw ConfigError(os.str());
  }
  ref.noise_var = std::max(0.0, noise);
  return ref;
}

CMatrix eve_reference(const PowerAllocation& alloc, const SymbolBlock& symbols, const RicianRef& ref,
                      std::uint64_t seed) {
  const CMatrix x = transmit_block(alloc, symbols);
  const double los_amp = std::sqrt(ref.gain * ref.los_fraction());
  const double nlos_amp = std::sqrt(ref.gain * (1.0 - ref.los_fraction()));
  CMatrix y = los_amp * x;

  Rng rng(seed);
  if (nlos_amp > 0.0) {
    CVector h_frame(x.cols());
    for (Eigen::Index k = 0; k < x.cols(); ++k) h_frame[k] = rng.complex_normal(1.0);
    for (Eigen::Index m = 0; m < x.rows(); ++m) {
      if (ref.coherence == NlosCoherence::PerSymbol && m > 0) {
        for (Eigen::Index k = 0; k < x.cols(); ++k) h_frame[k] = rng.complex_normal(1.0);
      }
      y.row(m).array() += nlos_amp * h_frame.transpose().array() * x.row(m).array();
    }
  }
  if (ref.noise_var > 0.0) {
    for (Eigen::Index m = 0; m < y.rows(); ++m) {
      for (Eigen::Index k = 0; k < y.cols(); ++k) y(m, k) += rng.complex_normal(ref.noise_var);
    }
  }
  return y;
}

CommChannel flat_channel(int n, double snr) {
  CommChannel ch;
  ch.gains = CVector::Constant(n, cd(std::sqrt(snr), 0.0));
  ch.noise_var = 1.0;
  return ch;
}

CommChannel rayleigh_channel(int n, double snr, std::uint64_t seed) {
  Rng rng(seed);
  CommChannel ch;
  ch.noise_var = 1.0;
  ch.gains.resize(n);
  const double var = snr;
  for (int i = 0; i < n; ++i) ch.gains[i] = rng.complex_normal(var);
  return ch;
}

double comm_rate(const CommChannel& ch, const PowerAllocation& alloc, const OfdmGrid& grid) {
  if (ch.n() != alloc.n()) throw LengthError("channel length does not match the allocation");
  const RVector g = ch.snr_per_unit_power();
  std::vector<double> terms(alloc.n());
  for (int i = 0; i < alloc.n(); ++i) terms[i] = std::log2(1.0 + g[i] * alloc.power[i]);
  return grid.bandwidth_hz / alloc.n() * dsp::compensated_sum(terms);
}

}  // namespace afs
