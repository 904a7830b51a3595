#ifndef UWBLOC_CSV_IO_HPP_
#define UWBLOC_CSV_IO_HPP_

// Text formats. Doubles are written in shortest round-trip form, so every file
// parses back to bit-identical values.
//
//   SimLog        time_s,kind,src,dst,seq,anchor,distance_m,truth_x,truth_y,truth_z
//   measurements  time_s,anchor,seq,distance_m
//   estimate      time_s,est_x,est_y,est_z,est_vx,est_vy,est_vz,p_trace_pos,converged
//   range errors  anchor_id,time_s,range_error_m
//   truth         time_s,x,y,z
//
// Readers throw ConfigError carrying the 1-based line number of the bad row.

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <string>
#include <vector>

#include "uwbloc/error.hpp"
#include "uwbloc/localizer.hpp"
#include "uwbloc/radio_sim.hpp"
#include "uwbloc/scenario.hpp"

namespace uwbloc::csv {

std::string format_double(double value);

void write_simlog(std::ostream& out, const SimLog& log);
SimLog read_simlog(std::istream& in);

void write_measurements(std::ostream& out, const std::vector<RangeMeasurement>& measurements);
std::vector<RangeMeasurement> read_measurements(std::istream& in);

void write_estimates(std::ostream& out, const std::vector<EstimateRow>& rows);
std::vector<EstimateRow> read_estimates(std::istream& in);

void write_range_errors(std::ostream& out, const std::vector<RangeErrorSample>& samples);
std::vector<RangeErrorSample> read_range_errors(std::istream& in);

void write_truth(std::ostream& out, const std::vector<TruthSample>& truth);
std::vector<TruthSample> read_truth(std::istream& in);

/// Reads the header line without consuming the stream contents otherwise.
std::string peek_header(const std::filesystem::path& path);

/// `key=value` lines, one statistic per line.
void write_summary_kv(std::ostream& out, const Summary& summary);
/// Aligned table for humans.
void write_summary_table(std::ostream& out, const Summary& summary);

/// Throws Error when the file cannot be opened.
std::ifstream open_input(const std::filesystem::path& path);

template <typename Fn>
void write_file(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  fn(out);
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace uwbloc::csv

#endif  // UWBLOC_CSV_IO_HPP_
