#ifndef UWBLOC_BATCH_HPP_
#define UWBLOC_BATCH_HPP_

#include <cstdint>
#include <vector>

#include "uwbloc/run_config.hpp"
#include "uwbloc/scenario.hpp"

namespace uwbloc {

/// Run i uses seed base.seed + i (clocks and radio stream both follow the seed).
RunConfig seeded_run(const RunConfig& base, int index);

/// Reference implementation: one run after another.
std::vector<ExperimentResult> run_batch_serial(const RunConfig& base, int runs);

/// Same results as run_batch_serial, with runs spread over OpenMP threads.
/// The first exception raised by any run is rethrown after the loop.
std::vector<ExperimentResult> run_batch_parallel(const RunConfig& base, int runs);

/// Pools the range errors and counters of several runs. Position RMSE is the
/// root of the pooled mean squared error.
ErrorReport merge_reports(const std::vector<ExperimentResult>& results);

}  // namespace uwbloc

#endif  // UWBLOC_BATCH_HPP_
