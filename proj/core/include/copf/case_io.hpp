#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "copf/dispatch.hpp"
#include "copf/model.hpp"
#include "copf/power_flow.hpp"

namespace copf::io {

/// Fully validated case in canonical units (MW, MWh, ton, ton/MWh). Emission
/// quantities in the file itself use the declared emission_unit; intensity
/// caps convert like intensities, emission caps like intensity x MWh (klbs
/// when the file is in lbs/kWh).
struct Case {
  Network network;
  TimeGrid grid;
  dispatch::CarbonPolicy policy;
  dispatch::PfModel pf_model = dispatch::PfModel::Dc;
  EsModelKind es_model = EsModelKind::WaterTank;
  dispatch::DispatchOptions options;
  std::optional<pf::Dispatch> setpoints;  // explicit per-period generator P (MW)
  std::string source_path;
  std::uint64_t input_hash = 0;
};

/// Parse and validate a case file. Unknown keys are rejected (SchemaError);
/// malformed values raise ParseError; bad units raise UnitError.
Case load_case(const std::string& path);
Case parse_case(const std::string& json_text, const std::string& name = "<memory>");

/// Serialize back to the case schema (canonical values converted into the
/// declared unit); load(serialize(c)) reproduces canonical values to 1e-12.
std::string serialize_case(const Case& c);

std::uint64_t fnv1a_hash(const std::string& bytes);

}  // namespace copf::io
