#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "lasround/generators.hpp"
#include "lasround/report.hpp"
#include "lasround/rounding.hpp"
#include "lasround/sdp.hpp"
#include "lasround/spectral.hpp"

using nlohmann::json;
using namespace lasround;

namespace {

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void write_output(const json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  std::ofstream of(out);
  if (!of) throw input_error("cannot write " + out);
  of << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SDP-hierarchy relaxations and global-correlation rounding for 2-CSPs"};
  app.require_subcommand(1);

  // ---- gen ----
  auto* gen = app.add_subcommand("gen", "generate an instance");
  std::string gen_kind = "max-cut", graph_kind = "cycle", gen_base, gen_out;
  int gen_n = 5, gen_d = 3, gen_dim = 3, gen_k = 2, gen_copies = 2;
  double gen_noise = 0.0;
  std::uint64_t gen_seed = 1;
  gen->add_option("--kind", gen_kind, "max-cut | planted-ug | disjoint-copies");
  gen->add_option("--graph", graph_kind, "cycle | complete | hypercube | random-regular");
  gen->add_option("--n", gen_n, "vertex count");
  gen->add_option("--d", gen_d, "degree (random-regular)");
  gen->add_option("--dim", gen_dim, "dimension (hypercube)");
  gen->add_option("--k", gen_k, "alphabet size (planted-ug)");
  gen->add_option("--noise", gen_noise, "noise fraction / weight perturbation");
  gen->add_option("--copies", gen_copies, "copy count (disjoint-copies)");
  gen->add_option("--base", gen_base, "base instance file (disjoint-copies)");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output file (default stdout)");

  // ---- spectrum ----
  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues and threshold ranks");
  std::string spec_in, spec_out;
  std::vector<double> spec_taus{0.5, 0.9};
  spectrum->add_option("--in", spec_in, "instance file")->required();
  spectrum->add_option("--tau", spec_taus, "thresholds to report");
  spectrum->add_option("--out", spec_out, "output file (default stdout)");

  // ---- solve ----
  auto* solve_cmd = app.add_subcommand("solve", "solve the hierarchy relaxation");
  std::string solve_in, solve_out, solve_hierarchy = "lasserre";
  int solve_depth = 2, solve_weak_rounds = 3, solve_max_iter = 20000;
  double solve_tol = 1e-6;
  std::size_t solve_cap = 5000;
  bool solve_sampled = false;
  std::uint64_t solve_seed = 0;
  solve_cmd->add_option("--in", solve_in, "instance file")->required();
  solve_cmd->add_option("--depth", solve_depth, "moment-matrix depth d");
  solve_cmd->add_option("--hierarchy", solve_hierarchy, "lasserre | weak");
  solve_cmd->add_option("--rounds", solve_weak_rounds, "weak hierarchy: max subset size");
  solve_cmd->add_flag("--sampled", solve_sampled, "weak hierarchy: sampled seed-closed subsets");
  solve_cmd->add_option("--tol", solve_tol, "feasibility tolerance");
  solve_cmd->add_option("--max-iter", solve_max_iter, "iteration cap");
  solve_cmd->add_option("--cap", solve_cap, "basis size cap");
  solve_cmd->add_option("--seed", solve_seed, "solver seed (method is deterministic)");
  solve_cmd->add_option("--out", solve_out, "solution artifact file");

  // ---- round ----
  auto* round_cmd = app.add_subcommand("round", "round a solved relaxation");
  std::string round_sol, round_out, round_strategy = "random";
  int round_trials = 32, round_rounds = 0;
  std::uint64_t round_seed = 1;
  round_cmd->add_option("--sol", round_sol, "solution artifact from `solve`")->required();
  round_cmd->add_option("--strategy", round_strategy, "random | greedy | exhaustive");
  round_cmd->add_option("--trials", round_trials, "number of trials");
  round_cmd->add_option("--rounds", round_rounds, "conditioning budget r (0 = from solution)");
  round_cmd->add_option("--seed", round_seed, "rng seed");
  round_cmd->add_option("--out", round_out, "run artifact file");

  // ---- verify ----
  auto* verify_cmd = app.add_subcommand("verify", "re-check invariants of a stored run");
  std::string verify_in;
  verify_cmd->add_option("--run", verify_in, "run artifact from `round`")->required();

  // ---- experiment ----
  auto* exp_cmd = app.add_subcommand("experiment", "run a config of solves and roundings");
  std::string exp_config, exp_out = "experiment";
  exp_cmd->add_option("--config", exp_config, "experiment config file")->required();
  exp_cmd->add_option("--out", exp_out, "output prefix");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      SeedStream stream(gen_seed);
      auto rng = stream.engine(0);
      json spec;
      if (gen_kind == "disjoint-copies") {
        if (gen_base.empty()) throw input_error("disjoint-copies requires --base");
        spec = {{"kind", "disjoint-copies"},
                {"base", json{{"kind", "inline"}, {"instance", read_json(gen_base)}}},
                {"copies", gen_copies}};
      } else {
        json graph;
        if (graph_kind == "cycle") graph = {{"kind", "cycle"}, {"n", gen_n}};
        else if (graph_kind == "complete") graph = {{"kind", "complete"}, {"n", gen_n}};
        else if (graph_kind == "hypercube")
          graph = {{"kind", "hypercube"}, {"dim", gen_dim}, {"noise", gen_noise}};
        else if (graph_kind == "random-regular")
          graph = {{"kind", "random-regular"}, {"n", gen_n}, {"d", gen_d}};
        else throw input_error("unknown graph kind " + graph_kind);
        if (gen_kind == "max-cut") spec = {{"kind", "max-cut"}, {"graph", graph}};
        else if (gen_kind == "planted-ug")
          spec = {{"kind", "planted-ug"}, {"graph", graph}, {"k", gen_k}, {"noise", gen_noise}};
        else throw input_error("unknown kind " + gen_kind);
      }
      Csp2Instance inst = instance_from_spec(spec, rng);
      write_output(inst.to_json(), gen_out);
    } else if (*spectrum) {
      Csp2Instance inst = Csp2Instance::from_json(read_json(spec_in));
      write_output(spectrum_json(inst, spec_taus), spec_out);
    } else if (*solve_cmd) {
      Csp2Instance inst = Csp2Instance::from_json(read_json(solve_in));
      RelaxationOptions ropts;
      ropts.hierarchy = solve_hierarchy == "weak" ? Hierarchy::weak : Hierarchy::lasserre;
      ropts.basis_cap = solve_cap;
      ropts.weak_rounds = solve_weak_rounds;
      ropts.sampled_subsets = solve_sampled;
      ropts.sample_seed = solve_seed;
      SolveOptions sopts;
      sopts.tol = solve_tol;
      sopts.max_iter = solve_max_iter;
      sopts.seed = solve_seed;
      RelaxationProblem prob = build_relaxation(inst, solve_depth, ropts);
      auto [moment, rep] = solve(prob, sopts);
      write_output(solution_to_json(inst, moment, rep, ropts), solve_out);
      std::cerr << "objective " << rep.objective << " psd " << rep.psd_violation
                << " consistency " << rep.consistency_violation << " iters " << rep.iterations
                << (rep.converged ? "" : " (not converged)") << "\n";
    } else if (*round_cmd) {
      json artifact = read_json(round_sol);
      LoadedSolution sol = solution_from_json(artifact);
      RoundInstanceOptions opts;
      opts.strategy = strategy_from_string(round_strategy);
      opts.trials = round_trials;
      opts.rounds = round_rounds;
      SeedStream stream(round_seed);
      auto rng = stream.engine(0);
      RoundingRun run = round_instance(sol.instance, sol.moment, opts, rng);
      run.seed = round_seed;
      json out;
      out["schema_version"] = kSchemaVersion;
      out["solution"] = artifact;
      out["rounding"] = run.to_json();
      write_output(out, round_out);
      std::cerr << "best value " << run.best_value << " (sdp " << run.sdp_objective << ")\n";
    } else if (*verify_cmd) {
      auto checks = verify_run(read_json(verify_in));
      bool all = true;
      for (const auto& c : checks) {
        std::cout << (c.pass ? "[PASS] " : "[FAIL] ") << c.name << ": " << c.detail << "\n";
        all = all && c.pass;
      }
      return all ? 0 : 1;
    } else if (*exp_cmd) {
      json result = run_experiment(read_json(exp_config), &std::cerr);
      json report = {{"schema_version", result["schema_version"]},
                     {"master_seed", result["master_seed"]},
                     {"report", result["report"]}};
      write_output(report, exp_out + ".report.json");
      write_output(result["timing"], exp_out + ".timing.json");
      std::ofstream csv(exp_out + ".csv");
      csv << report_csv(result);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
