#include "afshape/sensing_sim.hpp"

#include "afshape/rng.hpp"

namespace afs {

namespace {

enum Stream : std::uint64_t { kSymbols = 0, kAliceNoise = 1, kEveNoise = 2, kEveReference = 3 };

CMatrix filtered_frame(const SensingSetup& setup, const RadarScene& scene, ReceiverChoice rx,
                       std::uint64_t frame_seed) {
  const OfdmGrid& g = setup.grid;
  const SymbolBlock symbols =
      draw_symbols(setup.constellation, g.m_sym, g.n, derive_seed(frame_seed, kSymbols));
  if (rx.who == Observer::Alice) {
    const CMatrix y = sensing_snapshot(scene, g, setup.alloc, symbols, setup.alice_noise_var,
                                       derive_seed(frame_seed, kAliceNoise));
    const CMatrix x = transmit_block(setup.alloc, symbols);
    return rx.kind == ReceiverKind::MF ? alice_mf_spectrum(y, x) : alice_rf_spectrum(y, x);
  }
  const CMatrix ys = sensing_snapshot(scene, g, setup.alloc, symbols, setup.eve_noise_var,
                                      derive_seed(frame_seed, kEveNoise));
  const CMatrix yr =
      eve_reference(setup.alloc, symbols, setup.eve_ref, derive_seed(frame_seed, kEveReference));
  return rx.kind == ReceiverKind::MF ? eve_mf_spectrum(ys, yr) : eve_rf_spectrum(ys, yr);
}

}  // namespace

CMatrix simulate_filtered(const SensingSetup& setup, const RadarScene& scene, ReceiverChoice rx,
                          std::uint64_t frame_seed) {
  return filtered_frame(setup, scene, rx, frame_seed);
}

CMatrix simulate_filtered_noise(const SensingSetup& setup, ReceiverChoice rx,
                                std::uint64_t frame_seed) {
  return filtered_frame(setup, RadarScene{}, rx, frame_seed);
}

}  // namespace afs
