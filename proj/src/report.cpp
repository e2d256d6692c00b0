#include "gpsel/report.hpp"

#include <cstdio>
#include <fstream>

#include "gpsel/errors.hpp"
#include "gpsel/version.hpp"

namespace gpsel {

namespace {

using nlohmann::json;

json ranking_to_json(const RankingRecord& r) {
  return {{"method", r.method}, {"split", r.split}, {"scores", r.scores},
          {"normalized", r.normalized}};
}

RankingRecord ranking_from_json(const json& j) {
  RankingRecord r;
  r.method = j.at("method").get<std::string>();
  r.split = j.at("split").get<int>();
  r.scores = j.at("scores").get<std::vector<double>>();
  r.normalized = j.at("normalized").get<bool>();
  return r;
}

json curve_to_json(const CurveRecord& c) {
  return {{"method", c.method}, {"split", c.split}, {"mlpd", c.mlpd}, {"ok", c.ok}};
}

CurveRecord curve_from_json(const json& j) {
  CurveRecord c;
  c.method = j.at("method").get<std::string>();
  c.split = j.at("split").get<int>();
  c.mlpd = j.at("mlpd").get<std::vector<double>>();
  c.ok = j.at("ok").get<std::vector<bool>>();
  return c;
}

json trace_to_json(const TraceRecord& t) {
  json j{{"split", t.split},
         {"added_inputs", t.added_inputs},
         {"divergences", t.divergences},
         {"posterior_kls", t.posterior_kls},
         {"warnings", t.warnings}};
  if (!t.wall_time_s.empty()) j["wall_time_s"] = t.wall_time_s;
  return j;
}

TraceRecord trace_from_json(const json& j) {
  TraceRecord t;
  t.split = j.at("split").get<int>();
  t.added_inputs = j.at("added_inputs").get<std::vector<int>>();
  t.divergences = j.at("divergences").get<std::vector<double>>();
  t.posterior_kls = j.at("posterior_kls").get<std::vector<double>>();
  t.warnings = j.at("warnings").get<std::vector<std::string>>();
  if (j.contains("wall_time_s")) t.wall_time_s = j["wall_time_s"].get<std::vector<double>>();
  return t;
}

}  // namespace

json to_json(const ResultReport& r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["software_version"] = r.software_version;
  j["config"] = r.config;
  j["rankings"] = json::array();
  for (const auto& x : r.rankings) j["rankings"].push_back(ranking_to_json(x));
  j["curves"] = json::array();
  for (const auto& x : r.curves) j["curves"].push_back(curve_to_json(x));
  j["traces"] = json::array();
  for (const auto& x : r.traces) j["traces"].push_back(trace_to_json(x));
  j["reference_mlpd"] = json::array();
  for (const auto& x : r.reference_mlpd) {
    j["reference_mlpd"].push_back({{"split", x.split}, {"value", x.value}});
  }
  j["diagnostics"] = r.diagnostics;
  j["summary"] = r.summary;
  return j;
}

ResultReport report_from_json(const json& j) {
  ResultReport r;
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != kReportSchemaVersion) {
    throw SchemaError("report schema version " + std::to_string(r.schema_version) +
                      " is not supported (expected " + std::to_string(kReportSchemaVersion) + ")");
  }
  r.software_version = j.at("software_version").get<std::string>();
  r.config = j.at("config");
  for (const auto& x : j.at("rankings")) r.rankings.push_back(ranking_from_json(x));
  for (const auto& x : j.at("curves")) r.curves.push_back(curve_from_json(x));
  for (const auto& x : j.at("traces")) r.traces.push_back(trace_from_json(x));
  for (const auto& x : j.at("reference_mlpd")) {
    r.reference_mlpd.push_back({x.at("split").get<int>(), x.at("value").get<double>()});
  }
  r.diagnostics = j.at("diagnostics");
  r.summary = j.at("summary");
  return r;
}

void emit_report(const ResultReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write report to " + path);
  out << to_json(r).dump(2) << "\n";
  if (!out) throw IoError("write failed for " + path);
}

ResultReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open report " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("cannot parse report " + path + ": " + e.what());
  }
  try {
    return report_from_json(j);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("malformed report: ") + e.what());
  }
}

void write_curves_csv(const ResultReport& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write CSV to " + path);
  out << "method,split,k,mlpd\n";
  char buf[64];
  for (const auto& c : r.curves) {
    for (std::size_t k = 0; k < c.mlpd.size(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g", c.mlpd[k]);
      out << c.method << "," << c.split << "," << k << "," << buf << "\n";
    }
  }
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace gpsel
