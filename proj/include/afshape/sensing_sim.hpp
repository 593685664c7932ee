#pragma once

#include <cstdint>

#include "afshape/constellation.hpp"
#include "afshape/receivers.hpp"
#include "afshape/scene.hpp"
#include "afshape/waveform.hpp"

namespace afs {

/// Everything needed to synthesize one frame at Alice or Eve.
struct SensingSetup {
  OfdmGrid grid;
  Constellation constellation;
  PowerAllocation alloc;
  double alice_noise_var = 1.0;
  double eve_noise_var = 1.0;
  RicianRef eve_ref;
};

struct ReceiverChoice {
  Observer who = Observer::Alice;
  ReceiverKind kind = ReceiverKind::RF;
};

/// Filtered spectrum block [M_sym x N] for one frame.
///
/// The per-frame symbols derive from `frame_seed` alone, so Alice and Eve
/// simulated with the same seed observe the same transmission. Alice's
/// noise, Eve's surveillance noise and Eve's reference link use separate
/// derived streams.
CMatrix simulate_filtered(const SensingSetup& setup, const RadarScene& scene, ReceiverChoice rx,
                          std::uint64_t frame_seed);

/// Same as simulate_filtered but with the scene removed: only the receiver
/// noise passes through the filter. For Alice this is exactly the noise term
/// of the filtered output (both filters are linear in the echo).
CMatrix simulate_filtered_noise(const SensingSetup& setup, ReceiverChoice rx,
                                std::uint64_t frame_seed);

}  // namespace afs
