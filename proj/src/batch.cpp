#include "uwbloc/batch.hpp"

#include <cmath>
#include <exception>

#include "uwbloc/error.hpp"

namespace uwbloc {

RunConfig seeded_run(const RunConfig& base, int index) {
  RunConfig cfg = base;
  cfg.seed = base.seed + static_cast<std::uint64_t>(index);
  return cfg;
}

std::vector<ExperimentResult> run_batch_serial(const RunConfig& base, int runs) {
  if (runs < 1) throw ConfigError("--runs must be >= 1");
  std::vector<ExperimentResult> results;
  results.reserve(static_cast<std::size_t>(runs));
  for (int i = 0; i < runs; ++i) results.push_back(run_experiment(seeded_run(base, i).to_experiment()));
  return results;
}

std::vector<ExperimentResult> run_batch_parallel(const RunConfig& base, int runs) {
  if (runs < 1) throw ConfigError("--runs must be >= 1");
  std::vector<ExperimentResult> results(static_cast<std::size_t>(runs));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(runs));

#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < runs; ++i) {
    try {
      results[static_cast<std::size_t>(i)] = run_experiment(seeded_run(base, i).to_experiment());
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }

  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  return results;
}

ErrorReport merge_reports(const std::vector<ExperimentResult>& results) {
  ErrorReport merged;
  double squared = 0.0;
  for (const auto& r : results) {
    const auto& rep = r.report;
    merged.samples.insert(merged.samples.end(), rep.samples.begin(), rep.samples.end());
    merged.measurements += rep.measurements;
    merged.accepted += rep.accepted;
    merged.rejected += rep.rejected;
    if (rep.position_rmse) {
      squared += *rep.position_rmse * *rep.position_rmse * static_cast<double>(rep.rmse_samples);
      merged.rmse_samples += rep.rmse_samples;
    }
  }
  if (merged.rmse_samples > 0) merged.position_rmse = std::sqrt(squared / static_cast<double>(merged.rmse_samples));
  return merged;
}

}  // namespace uwbloc
