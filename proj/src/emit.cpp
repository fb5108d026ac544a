#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "fabppi/errors.hpp"
#include "fabppi/harness.hpp"
#include "json.hpp"

namespace fabppi::harness {

using nlohmann::ordered_json;

namespace {

const char* kHeader = "scenario,param,n,N,method,prior,mode,mse,avg_volume,coverage,reps,truth";

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// JSON numbers carry the same 10 significant digits as the CSV.
double round10(double v) { return std::strtod(num(v).c_str(), nullptr); }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Format parse_format(const std::string& s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw ConfigError("unknown output format '" + s + "' (csv or json)");
}

std::string render(const std::vector<MetricsRow>& rows, Format format) {
  if (rows.empty()) throw DomainError("no rows to emit");
  if (format == Format::Csv) {
    std::string out = std::string(kHeader) + "\n";
    for (const auto& r : rows) {
      out += csv_field(r.scenario) + ',' + csv_field(r.param) + ',' + std::to_string(r.n) + ',' +
             (r.N ? std::to_string(*r.N) : "inf") + ',' + csv_field(r.method) + ',' +
             csv_field(r.prior) + ',' + csv_field(r.mode) + ',' + num(r.mse) + ',' +
             num(r.avg_volume) + ',' + num(r.coverage) + ',' + std::to_string(r.reps) + ',' +
             num(r.truth) + '\n';
    }
    return out;
  }
  ordered_json arr = ordered_json::array();
  for (const auto& r : rows) {
    ordered_json o;
    o["scenario"] = r.scenario;
    o["param"] = r.param;
    o["n"] = r.n;
    if (r.N) {
      o["N"] = *r.N;
    } else {
      o["N"] = "inf";
    }
    o["method"] = r.method;
    o["prior"] = r.prior;
    o["mode"] = r.mode;
    o["mse"] = round10(r.mse);
    o["avg_volume"] = round10(r.avg_volume);
    o["coverage"] = round10(r.coverage);
    o["reps"] = r.reps;
    o["truth"] = round10(r.truth);
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

std::vector<MetricsRow> parse_rows_json(const std::string& text) {
  std::vector<MetricsRow> rows;
  try {
    const auto arr = ordered_json::parse(text);
    if (!arr.is_array()) throw ParseError("metrics JSON must be an array", 1);
    for (const auto& o : arr) {
      MetricsRow r;
      r.scenario = o.at("scenario").get<std::string>();
      r.param = o.at("param").get<std::string>();
      r.n = o.at("n").get<std::size_t>();
      if (!o.at("N").is_string()) r.N = o.at("N").get<std::size_t>();
      r.method = o.at("method").get<std::string>();
      r.prior = o.at("prior").get<std::string>();
      r.mode = o.at("mode").get<std::string>();
      r.mse = o.at("mse").get<double>();
      r.avg_volume = o.at("avg_volume").get<double>();
      r.coverage = o.at("coverage").get<double>();
      r.reps = o.at("reps").get<std::size_t>();
      r.truth = o.at("truth").get<double>();
      rows.push_back(std::move(r));
    }
  } catch (const ordered_json::exception& e) {
    throw ParseError(std::string("bad metrics JSON: ") + e.what(), 0);
  }
  return rows;
}

void emit(const std::vector<MetricsRow>& rows, Format format, const std::string& path) {
  const std::string text = render(rows, format);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write failed for '" + path + "'");
}

}  // namespace fabppi::harness
