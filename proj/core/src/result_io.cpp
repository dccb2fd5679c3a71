#include "copf/result_io.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "copf/errors.hpp"
#include "copf/version.hpp"

namespace copf::io {

using nlohmann::json;

std::string intensity_label(EmissionUnit u) {
  return u == EmissionUnit::TonPerMwh ? "ton_per_mwh" : "lbs_per_kwh";
}
std::string emission_label(EmissionUnit u) {
  return u == EmissionUnit::TonPerMwh ? "ton" : "klbs";
}
double intensity_out(double ton_per_mwh, EmissionUnit u) {
  return convert_emission_unit(ton_per_mwh, EmissionUnit::TonPerMwh, u);
}
double emission_out(double ton, EmissionUnit u) {
  // klbs when the case is lbs/kWh-based: 1 klbs = 0.45359237 ton
  return u == EmissionUnit::TonPerMwh ? ton : ton / kLbsPerKwhInTonPerMwh;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

json matrix(const std::vector<std::vector<double>>& m) {
  json out = json::array();
  for (const auto& row : m) out.push_back(row);
  return out;
}

std::vector<std::vector<double>> read_matrix(const json& j) {
  std::vector<std::vector<double>> out;
  for (const auto& row : j) out.push_back(row.get<std::vector<double>>());
  return out;
}

}  // namespace

std::string pf_solution_json(const Case& c, const pf::PowerFlowSolution& sol) {
  json doc;
  doc["tool"] = "copf";
  doc["version"] = kVersion;
  char hash[32];
  std::snprintf(hash, sizeof hash, "fnv1a:%016llx",
                static_cast<unsigned long long>(c.input_hash));
  doc["input_hash"] = hash;
  doc["periods"] = sol.periods;
  doc["units"] = {{"power", "MW"}, {"voltage", "pu"}, {"angle", "rad"}};
  doc["v_pu"] = matrix(sol.v_pu);
  doc["theta_rad"] = matrix(sol.theta_rad);
  doc["p_from_mw"] = matrix(sol.p_from_mw);
  doc["p_to_mw"] = matrix(sol.p_to_mw);
  doc["q_from_mvar"] = matrix(sol.q_from_mvar);
  doc["q_to_mvar"] = matrix(sol.q_to_mvar);
  doc["p_loss_mw"] = matrix(sol.p_loss_mw);
  doc["gen_p_mw"] = matrix(sol.gen_p_mw);
  doc["gen_q_mvar"] = matrix(sol.gen_q_mvar);
  doc["storage_ch_mw"] = matrix(sol.storage_ch_mw);
  doc["storage_dc_mw"] = matrix(sol.storage_dc_mw);
  return doc.dump(2);
}

std::string cflow_nodes_csv(const Case& c, const accounting::HorizonResult& hr) {
  const EmissionUnit u = c.network.emission_unit;
  std::ostringstream out;
  out << "bus_id,period,w_" << intensity_label(u) << ",r_load_" << emission_label(u)
      << "_per_h\n";
  const int T = static_cast<int>(hr.carbon.size());
  for (size_t i = 0; i < c.network.buses.size(); ++i) {
    for (int t = 0; t < T; ++t) {
      double r_load = 0.0;
      for (size_t l = 0; l < c.network.loads.size(); ++l)
        if (c.network.bus_index(c.network.loads[l].bus) == static_cast<int>(i))
          r_load += hr.carbon[t].r_load[l];
      out << c.network.buses[i].id << ',' << t << ','
          << fmt(intensity_out(hr.carbon[t].w[i], u)) << ','
          << fmt(emission_out(r_load, u)) << '\n';
    }
  }
  return out.str();
}

std::string cflow_branches_csv(const Case& c, const accounting::HorizonResult& hr) {
  const EmissionUnit u = c.network.emission_unit;
  std::ostringstream out;
  const std::string el = emission_label(u);
  out << "branch,from,to,period,r_from_" << el << "_per_h,r_to_" << el << "_per_h,r_loss_"
      << el << "_per_h\n";
  const int T = static_cast<int>(hr.carbon.size());
  for (size_t e = 0; e < c.network.branches.size(); ++e) {
    for (int t = 0; t < T; ++t) {
      out << e << ',' << c.network.branches[e].from << ',' << c.network.branches[e].to << ','
          << t << ',' << fmt(emission_out(hr.carbon[t].r_from[e], u)) << ','
          << fmt(emission_out(hr.carbon[t].r_to[e], u)) << ','
          << fmt(emission_out(hr.carbon[t].r_loss[e], u)) << '\n';
    }
  }
  return out.str();
}

std::string ledger_csv(const Case& c, const accounting::EmissionLedger& ledger) {
  const EmissionUnit u = c.network.emission_unit;
  const std::string el = emission_label(u);
  std::ostringstream out;
  out << "period,scope1_gen_" << el << "_per_h,scope2_load_" << el << "_per_h,scope2_loss_"
      << el << "_per_h,scope2_es_" << el << "_per_h\n";
  for (size_t t = 0; t < ledger.periods.size(); ++t) {
    const auto& p = ledger.periods[t];
    out << t << ',' << fmt(emission_out(p.scope1_gen, u)) << ','
        << fmt(emission_out(p.scope2_load, u)) << ',' << fmt(emission_out(p.scope2_loss, u))
        << ',' << fmt(emission_out(p.scope2_es, u)) << '\n';
  }
  out << "total," << fmt(emission_out(ledger.scope1_total, u)) << ','
      << fmt(emission_out(ledger.scope2_load_total, u)) << ','
      << fmt(emission_out(ledger.loss_total, u)) << ','
      << fmt(emission_out(ledger.scope2_es_total, u)) << '\n';
  return out.str();
}

std::string audit_json(const Case& c, const accounting::EmissionLedger& ledger) {
  const auto report = accounting::audit_conservation(ledger, ledger.kind);
  const EmissionUnit u = c.network.emission_unit;
  json doc;
  doc["identity"] = report.identity;
  doc["pass"] = report.pass;
  doc["period_residual_rel"] = report.period_residual_rel;
  doc["horizon_residual_rel"] = report.horizon_residual_rel;
  doc["emission_unit"] = emission_label(u);
  doc["scope1_total"] = emission_out(ledger.scope1_total, u);
  doc["scope2_load_total"] = emission_out(ledger.scope2_load_total, u);
  doc["scope2_loss_total"] = emission_out(ledger.loss_total, u);
  doc["scope2_es_total"] = emission_out(ledger.scope2_es_total, u);
  return doc.dump(2);
}

std::string sweep_csv(const Case& c, std::span<const dispatch::SweepPoint> points) {
  const EmissionUnit u = c.network.emission_unit;
  std::ostringstream out;
  out << "cap_" << intensity_label(u) << ",feasible,cost_usd,emissions_" << emission_label(u)
      << ",note\n";
  for (const auto& p : points) {
    out << fmt(intensity_out(p.cap, u)) << ',' << (p.feasible ? 1 : 0) << ','
        << fmt(p.cost) << ',' << fmt(emission_out(p.emissions_ton, u)) << ',' << p.note
        << '\n';
  }
  return out.str();
}

std::string bundle_json(const Case& c, const dispatch::DispatchSolution& sol,
                        const std::string& kind) {
  json doc;
  doc["tool"] = "copf";
  doc["version"] = kVersion;
  doc["kind"] = kind;
  char hash[32];
  std::snprintf(hash, sizeof hash, "fnv1a:%016llx",
                static_cast<unsigned long long>(c.input_hash));
  doc["input_hash"] = hash;
  doc["tolerances"] = {{"eq_tol", c.options.eq_tol},
                       {"kkt_tol", c.options.kkt_tol},
                       {"comp_eps_final", c.options.comp_eps_final}};
  json s;
  s["objective_usd"] = sol.objective;
  s["v_pu"] = matrix(sol.pf.v_pu);
  s["theta_rad"] = matrix(sol.pf.theta_rad);
  s["p_from_mw"] = matrix(sol.pf.p_from_mw);
  s["p_to_mw"] = matrix(sol.pf.p_to_mw);
  s["q_from_mvar"] = matrix(sol.pf.q_from_mvar);
  s["q_to_mvar"] = matrix(sol.pf.q_to_mvar);
  s["p_loss_mw"] = matrix(sol.pf.p_loss_mw);
  s["gen_p_mw"] = matrix(sol.pf.gen_p_mw);
  s["gen_q_mvar"] = matrix(sol.pf.gen_q_mvar);
  s["storage_ch_mw"] = matrix(sol.pf.storage_ch_mw);
  s["storage_dc_mw"] = matrix(sol.pf.storage_dc_mw);
  {
    json hf = json::array(), hr = json::array();
    for (const auto& row : sol.hat.at_from) {
      json r = json::array();
      for (const auto& pr : row) r.push_back({pr.fwd_mw, pr.rev_mw});
      hf.push_back(r);
    }
    for (const auto& row : sol.hat.at_to) {
      json r = json::array();
      for (const auto& pr : row) r.push_back({pr.fwd_mw, pr.rev_mw});
      hr.push_back(r);
    }
    s["hat_from_mw"] = hf;
    s["hat_to_mw"] = hr;
  }
  s["w_ton_per_mwh"] = matrix(sol.w);
  s["e_mwh"] = matrix(sol.e_mwh);
  s["w_es_ton_per_mwh"] = matrix(sol.w_es);
  s["nci_slack"] = matrix(sol.nci_slack);
  doc["solution"] = s;
  json res;
  res["balance_pu"] = sol.residuals.balance_pu;
  res["balance_q_pu"] = sol.residuals.balance_q_pu;
  res["flow_def_pu"] = sol.residuals.flow_def_pu;
  res["carbon_eq"] = sol.residuals.carbon_eq;
  res["es_energy_mwh"] = sol.residuals.es_energy_mwh;
  res["es_carbon"] = sol.residuals.es_carbon;
  res["complementarity_mw2"] = sol.residuals.complementarity_mw2;
  res["min_pair_mw"] = sol.residuals.min_pair_mw;
  res["constraint_violation"] = sol.residuals.constraint_violation;
  res["kkt_stationarity"] = sol.residuals.kkt_stationarity;
  res["w_vs_recomputed"] = sol.residuals.w_vs_recomputed;
  doc["residuals"] = res;
  return doc.dump(2);
}

dispatch::DispatchSolution load_bundle(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open bundle: " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("bundle parse failure: ") + e.what());
  }
  dispatch::DispatchSolution sol;
  const json& s = doc.at("solution");
  sol.objective = s.at("objective_usd").get<double>();
  sol.pf.v_pu = read_matrix(s.at("v_pu"));
  sol.pf.theta_rad = read_matrix(s.at("theta_rad"));
  sol.pf.p_from_mw = read_matrix(s.at("p_from_mw"));
  sol.pf.p_to_mw = read_matrix(s.at("p_to_mw"));
  sol.pf.q_from_mvar = read_matrix(s.at("q_from_mvar"));
  sol.pf.q_to_mvar = read_matrix(s.at("q_to_mvar"));
  sol.pf.p_loss_mw = read_matrix(s.at("p_loss_mw"));
  sol.pf.gen_p_mw = read_matrix(s.at("gen_p_mw"));
  sol.pf.gen_q_mvar = read_matrix(s.at("gen_q_mvar"));
  sol.pf.storage_ch_mw = read_matrix(s.at("storage_ch_mw"));
  sol.pf.storage_dc_mw = read_matrix(s.at("storage_dc_mw"));
  sol.pf.periods = static_cast<int>(sol.pf.theta_rad.size());
  for (const auto& row : s.at("hat_from_mw")) {
    std::vector<pf::DualFlowPair> r;
    for (const auto& pr : row) r.push_back({pr.at(0).get<double>(), pr.at(1).get<double>()});
    sol.hat.at_from.push_back(std::move(r));
  }
  for (const auto& row : s.at("hat_to_mw")) {
    std::vector<pf::DualFlowPair> r;
    for (const auto& pr : row) r.push_back({pr.at(0).get<double>(), pr.at(1).get<double>()});
    sol.hat.at_to.push_back(std::move(r));
  }
  sol.w = read_matrix(s.at("w_ton_per_mwh"));
  sol.e_mwh = read_matrix(s.at("e_mwh"));
  sol.w_es = read_matrix(s.at("w_es_ton_per_mwh"));
  sol.nci_slack = read_matrix(s.at("nci_slack"));
  const json& res = doc.at("residuals");
  sol.residuals.balance_pu = res.at("balance_pu").get<double>();
  sol.residuals.balance_q_pu = res.at("balance_q_pu").get<double>();
  sol.residuals.flow_def_pu = res.at("flow_def_pu").get<double>();
  sol.residuals.carbon_eq = res.at("carbon_eq").get<double>();
  sol.residuals.es_energy_mwh = res.at("es_energy_mwh").get<double>();
  sol.residuals.es_carbon = res.at("es_carbon").get<double>();
  sol.residuals.complementarity_mw2 = res.at("complementarity_mw2").get<double>();
  sol.residuals.min_pair_mw = res.at("min_pair_mw").get<double>();
  sol.residuals.constraint_violation = res.at("constraint_violation").get<double>();
  sol.residuals.kkt_stationarity = res.at("kkt_stationarity").get<double>();
  sol.residuals.w_vs_recomputed = res.at("w_vs_recomputed").get<double>();
  return sol;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
}

}  // namespace copf::io
