#pragma once

#include <string>

#include "copf/accounting.hpp"
#include "copf/case_io.hpp"
#include "copf/dispatch.hpp"

namespace copf::io {

/// Unit labels used in output headers; emission quantities are reported in
/// the case's declared unit (ton <-> klbs, ton/MWh <-> lbs/kWh).
std::string intensity_label(EmissionUnit u);
std::string emission_label(EmissionUnit u);
double intensity_out(double ton_per_mwh, EmissionUnit u);
double emission_out(double ton, EmissionUnit u);

/// Power flow solution as a JSON document.
std::string pf_solution_json(const Case& c, const pf::PowerFlowSolution& sol);

/// Carbon flow results as two deterministic CSV tables (rows ordered by
/// entity index, then period; headers carry explicit units).
std::string cflow_nodes_csv(const Case& c, const accounting::HorizonResult& hr);
std::string cflow_branches_csv(const Case& c, const accounting::HorizonResult& hr);

/// Emission ledger CSV plus the conservation audit as JSON.
std::string ledger_csv(const Case& c, const accounting::EmissionLedger& ledger);
std::string audit_json(const Case& c, const accounting::EmissionLedger& ledger);

/// Cap sweep table.
std::string sweep_csv(const Case& c, std::span<const dispatch::SweepPoint> points);

/// Dispatch solution bundle with provenance; doubles round-trip exactly.
std::string bundle_json(const Case& c, const dispatch::DispatchSolution& sol,
                        const std::string& kind);
dispatch::DispatchSolution load_bundle(const std::string& path);

/// Atomic write: temp file in the target directory, then rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace copf::io
