#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace gpsel {

struct RankingRecord {
  std::string method;
  int split = -1;  // -1 marks an aggregate over splits or replications
  std::vector<double> scores;
  bool normalized = false;
};

struct CurveRecord {
  std::string method;  // e.g. "forward/projected"
  int split = 0;
  std::vector<double> mlpd;  // index = number of inputs, starting at 0
  std::vector<bool> ok;
};

struct TraceRecord {
  int split = 0;
  std::vector<int> added_inputs;       // -1 leads the null-model entry
  std::vector<double> divergences;
  std::vector<double> posterior_kls;
  std::vector<double> wall_time_s;     // empty unless timing capture is on
  std::vector<std::string> warnings;
};

struct ReferenceMlpd {
  int split = 0;
  double value = 0.0;
};

// Everything one experiment run produces, serializable to JSON and back
// without loss. Timings are only populated when explicitly requested so that
// repeated runs with the same seed emit identical bytes.
struct ResultReport {
  int schema_version = 0;
  std::string software_version;
  nlohmann::json config;
  std::vector<RankingRecord> rankings;
  std::vector<CurveRecord> curves;
  std::vector<TraceRecord> traces;
  std::vector<ReferenceMlpd> reference_mlpd;
  nlohmann::json diagnostics;  // sampler reports and per-split warnings
  nlohmann::json summary;      // aggregated curves with 95% intervals
};

nlohmann::json to_json(const ResultReport& r);
ResultReport report_from_json(const nlohmann::json& j);

void emit_report(const ResultReport& r, const std::string& path);
ResultReport load_report(const std::string& path);

// Flat per-point rows: method,split,k,mlpd. Values carry 17 significant
// digits so they reload bit-exactly.
void write_curves_csv(const ResultReport& r, const std::string& path);

}  // namespace gpsel
