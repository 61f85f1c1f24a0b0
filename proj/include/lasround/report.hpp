#pragma once

#include <ostream>
#include <string>

#include "lasround/common.hpp"
#include "lasround/csp.hpp"
#include "lasround/rounding.hpp"
#include "lasround/sdp.hpp"

#include <json.hpp>

namespace lasround {

inline constexpr int kSchemaVersion = 1;

/// Build an instance from a generation spec:
///   {"kind":"max-cut","graph":GRAPH} | {"kind":"planted-ug","graph":GRAPH,"k":3,"noise":0.0}
///   | {"kind":"disjoint-copies","base":SPEC,"copies":3} | {"kind":"inline","instance":...}
/// with GRAPH one of {"kind":"cycle"|"complete"|"hypercube"|"random-regular", ...}.
Csp2Instance instance_from_spec(const nlohmann::json& spec, std::mt19937_64& rng);
ConstraintGraph graph_from_spec(const nlohmann::json& spec, std::mt19937_64& rng);

/// Self-contained solve artifact: instance echo, relaxation options, tables.
nlohmann::json solution_to_json(const Csp2Instance& inst, const MomentMatrix& M,
                                const SolveReport& report, const RelaxationOptions& opts);

struct LoadedSolution {
  Csp2Instance instance;
  MomentMatrix moment;
  SolveReport report;
  RelaxationOptions options;
};
LoadedSolution solution_from_json(const nlohmann::json& artifact);

nlohmann::json spectrum_json(const Csp2Instance& inst, const std::vector<double>& taus);

struct VerifyCheck {
  std::string name;
  bool pass;
  std::string detail;
};

/// Re-executes the module invariants against a stored run artifact
/// ({"solution": ..., "rounding": ...}).
std::vector<VerifyCheck> verify_run(const nlohmann::json& run_artifact);

/// Experiment runner: executes every run in the config on a worker pool
/// (bounded by LASROUND_THREADS), returns {"report": ..., "timing": ...};
/// the report part is byte-stable for a fixed config + master seed.
nlohmann::json run_experiment(const nlohmann::json& config, std::ostream* log = nullptr);

/// Fixed, versioned CSV projection of an experiment report.
std::string report_csv(const nlohmann::json& report);

}  // namespace lasround
