#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dcl/analysis.hpp"
#include "dcl/errors.hpp"

namespace dcl {

inline constexpr int kTraceSchema = 1;

// Traces are JSON lines: a header object carrying the schema version and an
// echo of the run configuration, then one object per recorded step.

inline void write_trace(const std::string& path, const nlohmann::json& config,
                        const TrainTrace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace: cannot open " + path);
  nlohmann::json header;
  header["schema"] = kTraceSchema;
  header["config"] = config;
  header["diverged"] = trace.diverged;
  out << header.dump() << '\n';
  for (const TraceRecord& r : trace.records) {
    nlohmann::json j;
    j["t"] = r.t;
    j["epoch"] = r.epoch;
    j["w"] = r.w;
    j["g"] = r.g;
    j["g_tilde"] = r.g_tilde;
    j["loss"] = r.loss;
    j["lr"] = r.lr;
    j["corrected"] = r.corrected;
    out << j.dump() << '\n';
  }
  if (!out) throw std::runtime_error("write_trace: write failed for " + path);
}

struct TraceFile {
  nlohmann::json config;
  TrainTrace trace;
};

inline TraceFile read_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_trace: cannot open " + path);
  TraceFile tf;
  std::string line;
  std::size_t line_no = 0;
  long prev_t = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("trace: ") + e.what(), line_no);
    }
    try {
      if (line_no == 1) {
        if (j.at("schema").get<int>() != kTraceSchema) {
          throw ParseError("trace: unsupported schema version", line_no);
        }
        tf.config = j.value("config", nlohmann::json::object());
        tf.trace.diverged = j.value("diverged", false);
        continue;
      }
      TraceRecord r;
      r.t = j.at("t").get<long>();
      r.epoch = j.at("epoch").get<int>();
      r.w = j.at("w").get<Vec>();
      r.g = j.at("g").get<Vec>();
      r.g_tilde = j.at("g_tilde").get<Vec>();
      r.loss = j.at("loss").get<double>();
      r.lr = j.at("lr").get<double>();
      r.corrected = j.at("corrected").get<bool>();
      if (r.t <= prev_t) throw ParseError("trace: t not strictly increasing", line_no);
      if (r.g.size() != r.w.size() || r.g_tilde.size() != r.w.size()) {
        throw ParseError("trace: w/g/g_tilde lengths differ", line_no);
      }
      prev_t = r.t;
      tf.trace.records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("trace: ") + e.what(), line_no);
    }
  }
  if (line_no == 0) throw ParseError("trace: empty file", 1);
  return tf;
}

// --- CSV ----------------------------------------------------------------------

// 17 significant digits round-trips IEEE doubles exactly; '.' is always the
// decimal separator regardless of locale.
inline std::string fmt_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline void csv_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(cells[i]);
  }
  out << '\n';
}

}  // namespace dcl
