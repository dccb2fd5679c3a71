#pragma once

#include <string>

#include "copf/errors.hpp"

namespace copf {

/// Emission intensity units accepted at the I/O boundary. All internal
/// quantities are canonical: MW, MWh, ton CO2, ton CO2/MWh.
enum class EmissionUnit { TonPerMwh, LbsPerKwh };

/// 1 lbs/kWh = 0.45359237 ton/MWh (exact, by definition of the pound).
inline constexpr double kLbsPerKwhInTonPerMwh = 0.45359237;

inline double convert_emission_unit(double value, EmissionUnit from, EmissionUnit to) {
  if (from == to) return value;
  if (from == EmissionUnit::LbsPerKwh && to == EmissionUnit::TonPerMwh)
    return value * kLbsPerKwhInTonPerMwh;
  return value / kLbsPerKwhInTonPerMwh;
}

inline std::string to_string(EmissionUnit u) {
  return u == EmissionUnit::TonPerMwh ? "ton_per_MWh" : "lbs_per_kWh";
}

inline EmissionUnit emission_unit_from_string(const std::string& s) {
  if (s == "ton_per_MWh") return EmissionUnit::TonPerMwh;
  if (s == "lbs_per_kWh") return EmissionUnit::LbsPerKwh;
  throw UnitError("unknown emission unit: " + s);
}

}  // namespace copf
