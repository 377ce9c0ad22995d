#pragma once

namespace cardioflow::units {

// Conversions used at the 3D-0D boundary only; the 0D model works in mmHg, mL, s.
inline constexpr double pa_per_mmhg = 133.322;
inline constexpr double ml_per_m3 = 1.0e6;

inline constexpr double mmhg_to_pa(double p) { return p * pa_per_mmhg; }
inline constexpr double pa_to_mmhg(double p) { return p / pa_per_mmhg; }
inline constexpr double m3s_to_mls(double q) { return q * ml_per_m3; }
inline constexpr double mls_to_m3s(double q) { return q / ml_per_m3; }

} // namespace cardioflow::units
