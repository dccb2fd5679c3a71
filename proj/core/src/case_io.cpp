#include "copf/case_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "copf/errors.hpp"
#include "copf/validation.hpp"

namespace copf::io {

using nlohmann::json;

std::uint64_t fnv1a_hash(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!allowed.count(it.key()))
      throw SchemaError("unknown key '" + it.key() + "' in " + where);
}

double num(const json& v, const std::string& field) {
  if (!v.is_number()) throw ParseError("field '" + field + "' must be a number", field);
  return v.get<double>();
}

double num_or(const json& obj, const std::string& field, double dflt) {
  if (!obj.contains(field)) return dflt;
  return num(obj.at(field), field);
}

std::vector<double> series(const json& v, int T, const std::string& field) {
  std::vector<double> out;
  if (v.is_number()) {
    out.assign(T, v.get<double>());
  } else if (v.is_array()) {
    if (static_cast<int>(v.size()) != T)
      throw ParseError("series '" + field + "' must have " + std::to_string(T) + " entries",
                       field);
    for (const auto& x : v) out.push_back(num(x, field));
  } else {
    throw ParseError("field '" + field + "' must be a number or an array", field);
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> limit_pair(const json& v, int T,
                                                               const std::string& field) {
  if (!v.is_array() || v.size() != 2)
    throw ParseError("field '" + field + "' must be a [min, max] pair", field);
  return {series(v[0], T, field + "[0]"), series(v[1], T, field + "[1]")};
}

}  // namespace

Case parse_case(const std::string& text, const std::string& name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("JSON parse failure in ") + name + ": " + e.what());
  }
  check_keys(doc, {"schema_version", "network", "time", "policy", "solver", "dispatch"}, name);
  if (!doc.contains("schema_version") || num(doc.at("schema_version"), "schema_version") != 1)
    throw SchemaError("missing or unsupported schema_version (expected 1)");
  if (!doc.contains("network")) throw SchemaError("missing required section 'network'");
  if (!doc.contains("time")) throw SchemaError("missing required section 'time'");

  Case c;
  c.source_path = name;
  c.input_hash = fnv1a_hash(text);

  const json& jt = doc.at("time");
  check_keys(jt, {"periods", "delta_hours"}, "time");
  if (!jt.contains("periods") || !jt.contains("delta_hours"))
    throw SchemaError("time section needs 'periods' and 'delta_hours'");
  c.grid.periods = static_cast<int>(num(jt.at("periods"), "periods"));
  c.grid.delta_hours = num(jt.at("delta_hours"), "delta_hours");
  const int T = c.grid.periods;
  if (T < 1) throw SchemaError("periods must be >= 1");

  const json& jn = doc.at("network");
  check_keys(jn, {"base_mva", "emission_unit", "buses", "branches", "generators", "loads",
                  "storage"},
             "network");
  if (!jn.contains("base_mva")) throw SchemaError("network: missing required field 'base_mva'");
  c.network.base_mva = num(jn.at("base_mva"), "base_mva");
  c.network.emission_unit = jn.contains("emission_unit")
                                ? emission_unit_from_string(jn.at("emission_unit"))
                                : EmissionUnit::TonPerMwh;
  const double to_ton = convert_emission_unit(1.0, c.network.emission_unit,
                                              EmissionUnit::TonPerMwh);

  if (!jn.contains("buses")) throw SchemaError("network: missing 'buses'");
  for (const auto& jb : jn.at("buses")) {
    check_keys(jb, {"id", "slack", "v_limits_pu", "theta_limits_rad", "v_setpoint_pu"}, "bus");
    Bus b;
    b.id = static_cast<int>(num(jb.at("id"), "bus.id"));
    b.slack = jb.value("slack", false);
    if (jb.contains("v_limits_pu")) {
      const auto& vl = jb.at("v_limits_pu");
      b.v_min_pu = num(vl.at(0), "v_limits_pu[0]");
      b.v_max_pu = num(vl.at(1), "v_limits_pu[1]");
    }
    if (jb.contains("theta_limits_rad")) {
      const auto& tl = jb.at("theta_limits_rad");
      b.theta_min_rad = num(tl.at(0), "theta_limits_rad[0]");
      b.theta_max_rad = num(tl.at(1), "theta_limits_rad[1]");
    }
    b.v_setpoint_pu = num_or(jb, "v_setpoint_pu", 1.0);
    c.network.buses.push_back(b);
  }

  if (jn.contains("branches")) {
    for (const auto& je : jn.at("branches")) {
      check_keys(je, {"from", "to", "r_pu", "x_pu", "g_pu", "b_pu", "s_max_pu"}, "branch");
      Branch br;
      br.from = static_cast<int>(num(je.at("from"), "branch.from"));
      br.to = static_cast<int>(num(je.at("to"), "branch.to"));
      if (je.contains("g_pu") || je.contains("b_pu")) {
        br.g_pu = num_or(je, "g_pu", 0.0);
        br.b_pu = num_or(je, "b_pu", 0.0);
      } else if (je.contains("x_pu")) {
        const double rr = num_or(je, "r_pu", 0.0);
        const double xx = num(je.at("x_pu"), "branch.x_pu");
        const double z2 = rr * rr + xx * xx;
        if (z2 <= 0) throw ParseError("branch impedance must be nonzero", "branch.x_pu");
        br.g_pu = rr / z2;
        br.b_pu = -xx / z2;
      } else {
        throw SchemaError("branch needs either (r_pu, x_pu) or (g_pu, b_pu)");
      }
      br.s_max_pu = num_or(je, "s_max_pu", kInf);
      c.network.branches.push_back(br);
    }
  }

  if (jn.contains("generators")) {
    int pos = 0;
    for (const auto& jg : jn.at("generators")) {
      check_keys(jg,
                 {"bus", "index", "p_limits_mw", "q_limits_mvar", "ramp_mw", "cost",
                  "emission_factor", "fuel"},
                 "generator");
      Generator g;
      g.bus = static_cast<int>(num(jg.at("bus"), "generator.bus"));
      g.index = static_cast<int>(num_or(jg, "index", pos));
      std::tie(g.p_min_mw, g.p_max_mw) = limit_pair(jg.at("p_limits_mw"), T, "p_limits_mw");
      if (jg.contains("q_limits_mvar"))
        std::tie(g.q_min_mvar, g.q_max_mvar) = limit_pair(jg.at("q_limits_mvar"), T,
                                                          "q_limits_mvar");
      else {
        g.q_min_mvar = broadcast(-kInf, T);
        g.q_max_mvar = broadcast(kInf, T);
      }
      if (jg.contains("ramp_mw")) {
        const auto& jr = jg.at("ramp_mw");
        g.ramp_down_mw = num(jr.at(0), "ramp_mw[0]");
        g.ramp_up_mw = num(jr.at(1), "ramp_mw[1]");
      }
      if (jg.contains("cost")) {
        const auto& jc = jg.at("cost");
        if (!jc.is_array() || jc.size() != 3)
          throw ParseError("generator cost must be [c2, c1, c0]", "cost");
        g.cost_c2 = num(jc.at(0), "cost[0]");
        g.cost_c1 = num(jc.at(1), "cost[1]");
        g.cost_c0 = num(jc.at(2), "cost[2]");
      }
      g.emission_factor = num_or(jg, "emission_factor", 0.0) * to_ton;
      g.fuel = jg.value("fuel", "");
      c.network.generators.push_back(std::move(g));
      ++pos;
    }
  }

  if (jn.contains("loads")) {
    int pos = 0;
    for (const auto& jl : jn.at("loads")) {
      check_keys(jl, {"bus", "index", "p_mw", "q_mvar"}, "load");
      Load l;
      l.bus = static_cast<int>(num(jl.at("bus"), "load.bus"));
      l.index = static_cast<int>(num_or(jl, "index", pos));
      l.p_mw = series(jl.at("p_mw"), T, "load.p_mw");
      l.q_mvar = jl.contains("q_mvar") ? series(jl.at("q_mvar"), T, "load.q_mvar")
                                       : broadcast(0.0, T);
      c.network.loads.push_back(std::move(l));
      ++pos;
    }
  }

  if (jn.contains("storage")) {
    for (const auto& js : jn.at("storage")) {
      check_keys(js,
                 {"bus", "p_ch_max_mw", "p_dc_max_mw", "eta_ch", "eta_dc", "kappa",
                  "e_limits_mwh", "e_max_mwh", "e_init_mwh", "degradation_cost", "w_es_init"},
                 "storage");
      StorageUnit s;
      s.bus = static_cast<int>(num(js.at("bus"), "storage.bus"));
      s.p_ch_max_mw = num(js.at("p_ch_max_mw"), "p_ch_max_mw");
      s.p_dc_max_mw = num(js.at("p_dc_max_mw"), "p_dc_max_mw");
      s.eta_ch = num_or(js, "eta_ch", 1.0);
      s.eta_dc = num_or(js, "eta_dc", 1.0);
      s.kappa = num_or(js, "kappa", 1.0);
      if (js.contains("e_limits_mwh")) {
        const auto& je = js.at("e_limits_mwh");
        s.e_min_mwh = num(je.at(0), "e_limits_mwh[0]");
        s.e_max_mwh = num(je.at(1), "e_limits_mwh[1]");
      } else if (js.contains("e_max_mwh")) {
        s.e_max_mwh = num(js.at("e_max_mwh"), "e_max_mwh");
        s.e_min_mwh = 0.01 * s.e_max_mwh;  // positive floor keeps E/e well-defined
      } else {
        throw SchemaError("storage needs e_limits_mwh or e_max_mwh");
      }
      s.e_init_mwh = num(js.at("e_init_mwh"), "e_init_mwh");
      s.degradation_cost = num_or(js, "degradation_cost", 0.0);
      s.w_es_init = num_or(js, "w_es_init", 0.0) * to_ton;
      c.network.storage.push_back(s);
    }
  }

  // policy
  const int nb = static_cast<int>(c.network.buses.size());
  if (doc.contains("policy")) {
    const json& jp = doc.at("policy");
    check_keys(jp, {"nci_cap", "user_cap", "node_cap", "soft", "slack_penalty"}, "policy");
    if (jp.contains("nci_cap") && !jp.at("nci_cap").is_null()) {
      const json& jc = jp.at("nci_cap");
      c.policy.nci_cap.assign(T, std::vector<double>(nb, kInf));
      if (jc.is_number()) {
        std::vector<char> has_load(nb, 0);
        for (const auto& l : c.network.loads)
          if (c.network.bus_index(l.bus) >= 0) has_load[c.network.bus_index(l.bus)] = 1;
        for (int t = 0; t < T; ++t)
          for (int i = 0; i < nb; ++i)
            if (has_load[i]) c.policy.nci_cap[t][i] = jc.get<double>() * to_ton;
      } else if (jc.is_object()) {
        for (auto it = jc.begin(); it != jc.end(); ++it) {
          const int idx = c.network.bus_index(std::stoi(it.key()));
          if (idx < 0) throw SchemaError("nci_cap references unknown bus " + it.key());
          for (int t = 0; t < T; ++t)
            c.policy.nci_cap[t][idx] = num(it.value(), "nci_cap") * to_ton;
        }
      } else if (jc.is_array()) {
        if (static_cast<int>(jc.size()) != T)
          throw SchemaError("nci_cap matrix must have one row per period");
        for (int t = 0; t < T; ++t) {
          if (static_cast<int>(jc[t].size()) != nb)
            throw SchemaError("nci_cap row must have one entry per bus");
          for (int i = 0; i < nb; ++i) {
            if (jc[t][i].is_null()) continue;  // null marks an uncapped bus
            c.policy.nci_cap[t][i] = num(jc[t][i], "nci_cap") * to_ton;
          }
        }
      } else {
        throw SchemaError("nci_cap must be a number, a bus map, or a period x bus matrix");
      }
    }
    if (jp.contains("user_cap")) {
      c.policy.user_cap_ton.assign(c.network.loads.size(), kInf);
      for (const auto& ju : jp.at("user_cap")) {
        check_keys(ju, {"bus", "index", "cap"}, "user_cap");
        const int bus = static_cast<int>(num(ju.at("bus"), "user_cap.bus"));
        const int index = static_cast<int>(num_or(ju, "index", 0));
        bool hit = false;
        for (size_t l = 0; l < c.network.loads.size(); ++l)
          if (c.network.loads[l].bus == bus && c.network.loads[l].index == index) {
            c.policy.user_cap_ton[l] = num(ju.at("cap"), "user_cap.cap") * to_ton;
            hit = true;
          }
        if (!hit) throw SchemaError("user_cap references unknown load");
      }
    }
    if (jp.contains("node_cap")) {
      c.policy.node_cap_ton.assign(nb, kInf);
      for (const auto& jv : jp.at("node_cap")) {
        check_keys(jv, {"bus", "cap"}, "node_cap");
        const int idx = c.network.bus_index(static_cast<int>(num(jv.at("bus"), "node_cap.bus")));
        if (idx < 0) throw SchemaError("node_cap references unknown bus");
        c.policy.node_cap_ton[idx] = num(jv.at("cap"), "node_cap.cap") * to_ton;
      }
    }
    c.policy.soft = jp.value("soft", false);
    c.policy.slack_penalty = num_or(jp, "slack_penalty", 0.0);
    if (c.policy.soft && !(c.policy.slack_penalty > 0))
      throw SchemaError("soft policy requires a positive slack_penalty");
  }

  if (doc.contains("solver")) {
    const json& js = doc.at("solver");
    check_keys(js,
               {"pf_model", "es_model", "eq_tol", "kkt_tol", "comp_eps_final", "max_outer",
                "max_inner", "emission_price"},
               "solver");
    const std::string pf = js.value("pf_model", "dc");
    if (pf == "dc")
      c.pf_model = dispatch::PfModel::Dc;
    else if (pf == "ac")
      c.pf_model = dispatch::PfModel::FullAc;
    else
      throw SchemaError("pf_model must be 'dc' or 'ac'");
    const std::string es = js.value("es_model", "water_tank");
    if (es == "water_tank")
      c.es_model = EsModelKind::WaterTank;
    else if (es == "load_clean_gen")
      c.es_model = EsModelKind::LoadCleanGen;
    else
      throw SchemaError("es_model must be 'water_tank' or 'load_clean_gen'");
    c.options.eq_tol = num_or(js, "eq_tol", c.options.eq_tol);
    c.options.kkt_tol = num_or(js, "kkt_tol", c.options.kkt_tol);
    c.options.comp_eps_final = num_or(js, "comp_eps_final", c.options.comp_eps_final);
    c.options.max_outer = static_cast<int>(num_or(js, "max_outer", c.options.max_outer));
    c.options.max_inner = static_cast<int>(num_or(js, "max_inner", c.options.max_inner));
  }

  if (doc.contains("dispatch")) {
    const json& jd = doc.at("dispatch");
    check_keys(jd, {"gen_p_mw", "storage_ch_mw", "storage_dc_mw"}, "dispatch");
    pf::Dispatch d;
    const size_t ng = c.network.generators.size();
    d.gen_p_mw.assign(T, std::vector<double>(ng, 0.0));
    if (jd.contains("gen_p_mw")) {
      const json& jg = jd.at("gen_p_mw");
      if (!jg.is_array() || jg.size() != ng)
        throw SchemaError("dispatch.gen_p_mw must list one entry per generator");
      for (size_t g = 0; g < ng; ++g) {
        const auto s = series(jg[g], T, "dispatch.gen_p_mw");
        for (int t = 0; t < T; ++t) d.gen_p_mw[t][g] = s[t];
      }
    }
    const size_t ns = c.network.storage.size();
    d.storage_ch_mw.assign(T, std::vector<double>(ns, 0.0));
    d.storage_dc_mw.assign(T, std::vector<double>(ns, 0.0));
    for (const char* key : {"storage_ch_mw", "storage_dc_mw"}) {
      if (!jd.contains(key)) continue;
      const json& jsrc = jd.at(key);
      if (!jsrc.is_array() || jsrc.size() != ns)
        throw SchemaError(std::string("dispatch.") + key + " must list one entry per unit");
      auto& dst = std::string(key) == "storage_ch_mw" ? d.storage_ch_mw : d.storage_dc_mw;
      for (size_t s = 0; s < ns; ++s) {
        const auto vals = series(jsrc[s], T, key);
        for (int t = 0; t < T; ++t) dst[t][s] = vals[t];
      }
    }
    c.setpoints = std::move(d);
  }

  const ValidationReport report = validate(c.network, c.grid);
  if (!report.ok()) {
    std::ostringstream msg;
    msg << "case fails validation:";
    for (const auto& v : report.violations) msg << "\n  [" << v.where << "] " << v.message;
    throw SchemaError(msg.str());
  }
  return c;
}

Case load_case(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open case file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  Case c = parse_case(buf.str(), path);
  c.source_path = path;
  return c;
}

std::string serialize_case(const Case& c) {
  const double from_ton =
      convert_emission_unit(1.0, EmissionUnit::TonPerMwh, c.network.emission_unit);
  json doc;
  doc["schema_version"] = 1;
  json jt;
  jt["periods"] = c.grid.periods;
  jt["delta_hours"] = c.grid.delta_hours;
  doc["time"] = jt;

  json jn;
  jn["base_mva"] = c.network.base_mva;
  jn["emission_unit"] = to_string(c.network.emission_unit);
  for (const auto& b : c.network.buses) {
    json jb;
    jb["id"] = b.id;
    if (b.slack) jb["slack"] = true;
    jb["v_limits_pu"] = {b.v_min_pu, b.v_max_pu};
    jb["theta_limits_rad"] = {b.theta_min_rad, b.theta_max_rad};
    jb["v_setpoint_pu"] = b.v_setpoint_pu;
    jn["buses"].push_back(jb);
  }
  for (const auto& e : c.network.branches) {
    json je;
    je["from"] = e.from;
    je["to"] = e.to;
    je["g_pu"] = e.g_pu;
    je["b_pu"] = e.b_pu;
    if (std::isfinite(e.s_max_pu)) je["s_max_pu"] = e.s_max_pu;
    jn["branches"].push_back(je);
  }
  for (const auto& g : c.network.generators) {
    json jg;
    jg["bus"] = g.bus;
    jg["index"] = g.index;
    jg["p_limits_mw"] = {g.p_min_mw, g.p_max_mw};
    const bool q_finite = std::all_of(g.q_min_mvar.begin(), g.q_min_mvar.end(),
                                      [](double v) { return std::isfinite(v); }) &&
                          std::all_of(g.q_max_mvar.begin(), g.q_max_mvar.end(),
                                      [](double v) { return std::isfinite(v); });
    if (q_finite) jg["q_limits_mvar"] = {g.q_min_mvar, g.q_max_mvar};
    if (std::isfinite(g.ramp_up_mw) && std::isfinite(g.ramp_down_mw))
      jg["ramp_mw"] = {g.ramp_down_mw, g.ramp_up_mw};
    jg["cost"] = {g.cost_c2, g.cost_c1, g.cost_c0};
    jg["emission_factor"] = g.emission_factor * from_ton;
    if (!g.fuel.empty()) jg["fuel"] = g.fuel;
    jn["generators"].push_back(jg);
  }
  for (const auto& l : c.network.loads) {
    json jl;
    jl["bus"] = l.bus;
    jl["index"] = l.index;
    jl["p_mw"] = l.p_mw;
    jl["q_mvar"] = l.q_mvar;
    jn["loads"].push_back(jl);
  }
  for (const auto& s : c.network.storage) {
    json js;
    js["bus"] = s.bus;
    js["p_ch_max_mw"] = s.p_ch_max_mw;
    js["p_dc_max_mw"] = s.p_dc_max_mw;
    js["eta_ch"] = s.eta_ch;
    js["eta_dc"] = s.eta_dc;
    js["kappa"] = s.kappa;
    js["e_limits_mwh"] = {s.e_min_mwh, s.e_max_mwh};
    js["e_init_mwh"] = s.e_init_mwh;
    js["degradation_cost"] = s.degradation_cost;
    js["w_es_init"] = s.w_es_init * from_ton;
    jn["storage"].push_back(js);
  }
  doc["network"] = jn;

  json jp;
  if (!c.policy.nci_cap.empty()) {
    json rows = json::array();
    for (const auto& row : c.policy.nci_cap) {
      json r = json::array();
      for (double v : row) r.push_back(std::isfinite(v) ? json(v * from_ton) : json(nullptr));
      rows.push_back(r);
    }
    jp["nci_cap"] = rows;
  }
  if (!c.policy.user_cap_ton.empty()) {
    json arr = json::array();
    for (size_t l = 0; l < c.policy.user_cap_ton.size(); ++l)
      if (std::isfinite(c.policy.user_cap_ton[l]))
        arr.push_back({{"bus", c.network.loads[l].bus},
                       {"index", c.network.loads[l].index},
                       {"cap", c.policy.user_cap_ton[l] * from_ton}});
    if (!arr.empty()) jp["user_cap"] = arr;
  }
  if (!c.policy.node_cap_ton.empty()) {
    json arr = json::array();
    for (size_t i = 0; i < c.policy.node_cap_ton.size(); ++i)
      if (std::isfinite(c.policy.node_cap_ton[i]))
        arr.push_back(
            {{"bus", c.network.buses[i].id}, {"cap", c.policy.node_cap_ton[i] * from_ton}});
    if (!arr.empty()) jp["node_cap"] = arr;
  }
  if (c.policy.soft) {
    jp["soft"] = true;
    jp["slack_penalty"] = c.policy.slack_penalty;
  }
  if (!jp.empty()) doc["policy"] = jp;

  json js;
  js["pf_model"] = c.pf_model == dispatch::PfModel::Dc ? "dc" : "ac";
  js["es_model"] = c.es_model == EsModelKind::WaterTank ? "water_tank" : "load_clean_gen";
  doc["solver"] = js;

  if (c.setpoints) {
    json jd;
    const size_t ng = c.network.generators.size();
    json jg = json::array();
    for (size_t g = 0; g < ng; ++g) {
      json col = json::array();
      for (int t = 0; t < c.grid.periods; ++t) col.push_back(c.setpoints->gen_p_mw[t][g]);
      jg.push_back(col);
    }
    jd["gen_p_mw"] = jg;
    doc["dispatch"] = jd;
  }
  return doc.dump(2);
}

}  // namespace copf::io
