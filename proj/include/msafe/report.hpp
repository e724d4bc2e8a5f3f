#pragma once
#include <msafe/bench.hpp>
#include <msafe/pipeline.hpp>
#include <msafe/simulation.hpp>

#include <iosfwd>
#include <json.hpp>
#include <string>

namespace msafe {

using Json = nlohmann::ordered_json;

BasisKind parse_mode(const std::string& name);
OperatorStorage parse_storage(const std::string& name);
const char* to_string(OperatorStorage storage);
SolverMethod parse_solver(const std::string& name);
const char* to_string(SolverMethod method);

/// Config as JSON. Grids are written as explicit value lists.
Json to_json(const PipelineConfig& config);

/// Applies the keys present in `j` on top of `base`. Grids accept either a
/// list of values or {"lo", "hi", "step"}. Unknown keys raise UsageError.
PipelineConfig config_from_json(const Json& j, PipelineConfig base = {});

/// Sensors are reported 1-based.
Json to_json(const StageState& state);
Json to_json(const FitResult& fit);

/// Deterministic run report: stages, selection, hyperparameters, cv_mse.
/// Timings are kept out so identical runs give identical bytes.
Json run_report(const RunResult& run, const PipelineConfig& config);
Json to_json(const Timings& timings);

/// Truth kernels with one-based sensors: {"p", "n", "q", "kernels": [{"sensor",
/// "t_coefficients", "z_coefficients"}]}.
Json to_json(const Truth& truth);
Truth truth_from_json(const Json& j);

Json to_json(const SimSettings& settings);
/// Keys as written by to_json(SimSettings) plus "threads"; missing keys keep
/// their defaults and grids accept {lo, hi, step}.
SimSettings sim_settings_from_json(const Json& j, SimSettings base = {});
Json to_json(const SimReport& report);

/// One line per replicate: theta,eta,mode,replicate,size,false_positives,
/// recovered,cv_mse,time,selected (one-based, ';'-separated).
void write_sim_csv(std::ostream& out, const SimReport& report);

Json to_json(const ModeBench& bench);
Json to_json(const BenchReport& report);

/// One line per mode: timings, cv_mse, mean block nnz fraction, small-entry
/// fraction and histogram bin fractions (largest magnitudes first).
void write_bench_csv(std::ostream& out, const BenchReport& report);

} // namespace msafe
