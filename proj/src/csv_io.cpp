#include "uwbloc/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

namespace uwbloc::csv {

namespace {

struct Row {
  int line;
  std::vector<std::string> fields;
};

std::string trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return std::string(s.substr(begin, end - begin + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(std::string_view(line).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Reads all rows after checking the header. Blank lines are skipped.
std::vector<Row> read_rows(std::istream& in, const std::vector<std::string>& header) {
  std::string line;
  int line_no = 0;
  bool have_header = false;
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split(line);
    if (!have_header) {
      if (fields != header) throw ConfigError("unexpected CSV header", line_no);
      have_header = true;
      continue;
    }
    if (fields.size() != header.size()) {
      throw ConfigError("expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()),
                        line_no);
    }
    rows.push_back({line_no, std::move(fields)});
  }
  if (!have_header) throw ConfigError("missing CSV header", line_no == 0 ? 1 : line_no);
  return rows;
}

double parse_double(const std::string& text, int line) {
  double value = 0.0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError("bad number '" + text + "'", line);
  return value;
}

template <typename Int>
Int parse_int(const std::string& text, int line, long long lo, long long hi) {
  long long value = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || value < lo || value > hi) {
    throw ConfigError("bad integer '" + text + "'", line);
  }
  return static_cast<Int>(value);
}

DeviceId parse_id(const std::string& text, int line) {
  return DeviceId{parse_int<std::uint8_t>(text, line, 0, 255)};
}

std::optional<double> parse_opt_double(const std::string& text, int line) {
  if (text.empty()) return std::nullopt;
  return parse_double(text, line);
}

std::string join(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += fields[i];
  }
  return out;
}

const std::vector<std::string> kSimLogHeader{"time_s", "kind",       "src",     "dst",     "seq",
                                             "anchor", "distance_m", "truth_x", "truth_y", "truth_z"};
const std::vector<std::string> kMeasurementHeader{"time_s", "anchor", "seq", "distance_m"};
const std::vector<std::string> kEstimateHeader{"time_s", "est_x",  "est_y",       "est_z",    "est_vx",
                                               "est_vy", "est_vz", "p_trace_pos", "converged"};
const std::vector<std::string> kErrorHeader{"anchor_id", "time_s", "range_error_m"};
const std::vector<std::string> kTruthHeader{"time_s", "x", "y", "z"};

std::string id(DeviceId d) { return std::to_string(d.value); }

}  // namespace

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_simlog(std::ostream& out, const SimLog& log) {
  out << join(kSimLogHeader) << '\n';
  for (const auto& e : log.entries) {
    out << format_double(e.time) << ',' << to_string(e.kind) << ',' << id(e.src) << ',' << id(e.dst) << ','
        << static_cast<int>(e.seq) << ',' << (e.anchor ? id(*e.anchor) : "") << ','
        << (e.distance ? format_double(*e.distance) : "");
    if (e.truth) {
      out << ',' << format_double(e.truth->x()) << ',' << format_double(e.truth->y()) << ','
          << format_double(e.truth->z());
    } else {
      out << ",,,";
    }
    out << '\n';
  }
}

SimLog read_simlog(std::istream& in) {
  SimLog log;
  for (const auto& row : read_rows(in, kSimLogHeader)) {
    const auto& f = row.fields;
    SimLogEntry e;
    e.time = parse_double(f[0], row.line);
    auto kind = parse_log_kind(f[1]);
    if (!kind) throw ConfigError("unknown row kind '" + f[1] + "'", row.line);
    e.kind = *kind;
    e.src = parse_id(f[2], row.line);
    e.dst = parse_id(f[3], row.line);
    e.seq = parse_int<std::uint8_t>(f[4], row.line, 0, 255);
    if (!f[5].empty()) e.anchor = parse_id(f[5], row.line);
    e.distance = parse_opt_double(f[6], row.line);
    if (!f[7].empty() || !f[8].empty() || !f[9].empty()) {
      e.truth = Point3(parse_double(f[7], row.line), parse_double(f[8], row.line), parse_double(f[9], row.line));
    }
    if (e.kind == LogKind::kMeasurement && (!e.anchor || !e.distance)) {
      throw ConfigError("MEAS row without anchor or distance", row.line);
    }
    log.entries.push_back(e);
  }
  return log;
}

void write_measurements(std::ostream& out, const std::vector<RangeMeasurement>& measurements) {
  out << join(kMeasurementHeader) << '\n';
  for (const auto& m : measurements) {
    out << format_double(m.time) << ',' << id(m.anchor) << ',' << static_cast<int>(m.seq) << ','
        << format_double(m.distance) << '\n';
  }
}

std::vector<RangeMeasurement> read_measurements(std::istream& in) {
  std::vector<RangeMeasurement> out;
  for (const auto& row : read_rows(in, kMeasurementHeader)) {
    const auto& f = row.fields;
    RangeMeasurement m;
    m.time = parse_double(f[0], row.line);
    m.anchor = parse_id(f[1], row.line);
    m.seq = parse_int<std::uint8_t>(f[2], row.line, 0, 255);
    m.distance = parse_double(f[3], row.line);
    if (!(m.distance >= 0.0) || !std::isfinite(m.time)) {
      throw ConfigError("distance must be >= 0 and time finite", row.line);
    }
    out.push_back(m);
  }
  return out;
}

void write_estimates(std::ostream& out, const std::vector<EstimateRow>& rows) {
  out << join(kEstimateHeader) << '\n';
  for (const auto& r : rows) {
    out << format_double(r.time) << ',' << format_double(r.position.x()) << ',' << format_double(r.position.y())
        << ',' << format_double(r.position.z()) << ',' << format_double(r.velocity.x()) << ','
        << format_double(r.velocity.y()) << ',' << format_double(r.velocity.z()) << ','
        << format_double(r.p_trace_pos) << ',' << (r.converged ? 1 : 0) << '\n';
  }
}

std::vector<EstimateRow> read_estimates(std::istream& in) {
  std::vector<EstimateRow> out;
  for (const auto& row : read_rows(in, kEstimateHeader)) {
    const auto& f = row.fields;
    std::vector<double> v;
    for (std::size_t i = 0; i < 8; ++i) v.push_back(parse_double(f[i], row.line));
    const int conv = parse_int<int>(f[8], row.line, 0, 1);
    out.push_back(EstimateRow{v[0], Point3(v[1], v[2], v[3]), Vector3(v[4], v[5], v[6]), v[7], conv == 1});
  }
  return out;
}

void write_range_errors(std::ostream& out, const std::vector<RangeErrorSample>& samples) {
  out << join(kErrorHeader) << '\n';
  for (const auto& s : samples) {
    out << id(s.anchor) << ',' << format_double(s.time) << ',' << format_double(s.error) << '\n';
  }
}

std::vector<RangeErrorSample> read_range_errors(std::istream& in) {
  std::vector<RangeErrorSample> out;
  for (const auto& row : read_rows(in, kErrorHeader)) {
    out.push_back(RangeErrorSample{parse_id(row.fields[0], row.line), parse_double(row.fields[1], row.line),
                                   parse_double(row.fields[2], row.line)});
  }
  return out;
}

void write_truth(std::ostream& out, const std::vector<TruthSample>& truth) {
  out << join(kTruthHeader) << '\n';
  for (const auto& t : truth) {
    out << format_double(t.time) << ',' << format_double(t.position.x()) << ',' << format_double(t.position.y())
        << ',' << format_double(t.position.z()) << '\n';
  }
}

std::vector<TruthSample> read_truth(std::istream& in) {
  std::vector<TruthSample> out;
  for (const auto& row : read_rows(in, kTruthHeader)) {
    const auto& f = row.fields;
    out.push_back(TruthSample{parse_double(f[0], row.line),
                              Point3(parse_double(f[1], row.line), parse_double(f[2], row.line),
                                     parse_double(f[3], row.line))});
  }
  return out;
}

std::string peek_header(const std::filesystem::path& path) {
  auto in = open_input(path);
  std::string line;
  while (std::getline(in, line)) {
    auto t = trim(line);
    if (!t.empty()) {
      std::string compact;
      for (const auto& f : split(t)) compact += (compact.empty() ? "" : ",") + f;
      return compact;
    }
  }
  return {};
}

std::ifstream open_input(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  return in;
}

void write_summary_kv(std::ostream& out, const Summary& s) {
  auto kv = [&out](const std::string& key, const std::string& value) { out << key << '=' << value << '\n'; };
  kv("measurements", std::to_string(s.measurements));
  kv("accepted", std::to_string(s.accepted));
  kv("rejected", std::to_string(s.rejected));
  kv("range_error.count", std::to_string(s.overall.count));
  kv("range_error.mean", format_double(s.overall.mean));
  kv("range_error.std", format_double(s.overall.std));
  kv("range_error.min", format_double(s.overall.min));
  kv("range_error.max", format_double(s.overall.max));
  kv("range_error.fraction_below_1m", format_double(s.fraction_below_1m));
  if (s.position_rmse) kv("position_rmse", format_double(*s.position_rmse));
  for (const auto& [anchor, st] : s.per_anchor) {
    const std::string prefix = "anchor." + std::to_string(anchor) + ".";
    kv(prefix + "count", std::to_string(st.count));
    kv(prefix + "mean", format_double(st.mean));
    kv(prefix + "std", format_double(st.std));
    kv(prefix + "max", format_double(st.max));
  }
  for (const auto& a : s.anchors_without_samples) kv("anchor." + id(a) + ".count", "0");
}

void write_summary_table(std::ostream& out, const Summary& s) {
  auto fixed = [](double v) {
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(3);
    os << v;
    return os.str();
  };
  auto pad = [](const std::string& text, std::size_t width) {
    return text.size() >= width ? text : std::string(width - text.size(), ' ') + text;
  };
  out << "range error [m]\n";
  out << pad("anchor", 8) << pad("count", 8) << pad("mean", 9) << pad("std", 9) << pad("max", 9) << '\n';
  for (const auto& [anchor, st] : s.per_anchor) {
    out << pad(std::to_string(anchor), 8) << pad(std::to_string(st.count), 8) << pad(fixed(st.mean), 9)
        << pad(fixed(st.std), 9) << pad(fixed(st.max), 9) << '\n';
  }
  for (const auto& a : s.anchors_without_samples) {
    out << pad(id(a), 8) << pad("0", 8) << "   (no accepted ranges)\n";
  }
  out << pad("all", 8) << pad(std::to_string(s.overall.count), 8) << pad(fixed(s.overall.mean), 9)
      << pad(fixed(s.overall.std), 9) << pad(fixed(s.overall.max), 9) << '\n';
  out << "below 1 m: " << fixed(100.0 * s.fraction_below_1m) << " %\n";
  out << "ranges: " << s.measurements << " received, " << s.accepted << " accepted, " << s.rejected
      << " rejected\n";
  if (s.position_rmse) out << "position RMSE: " << fixed(*s.position_rmse) << " m\n";
}

}  // namespace uwbloc::csv
