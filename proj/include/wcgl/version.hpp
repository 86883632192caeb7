#pragma once

namespace wcgl {

inline constexpr const char* kVersion = "wcgl 0.1.0";
inline constexpr int kManifestSchemaVersion = 1;

// Orientation of the edge currents, fixed so that the rate of change of each
// site energy equals eps times the sum of incoming currents along exact
// trajectories. Recorded verbatim in every run manifest.
inline constexpr const char* kCurrentSignConvention =
    "j(i,k) = -1/2 * gradV(q_i - q_k) . (p_i + p_k); d/dt E_i = eps * sum_k j(i,k)";

} // namespace wcgl
