#include "lasround/report.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <Eigen/Eigenvalues>

#include "lasround/generators.hpp"
#include "lasround/spectral.hpp"

namespace lasround {

ConstraintGraph graph_from_spec(const nlohmann::json& spec, std::mt19937_64& rng) {
  std::string kind = spec.at("kind").get<std::string>();
  if (kind == "cycle") return cycle_graph(spec.at("n").get<int>());
  if (kind == "complete") return complete_graph(spec.at("n").get<int>());
  if (kind == "hypercube")
    return hypercube_graph(spec.at("dim").get<int>(), spec.value("noise", 0.0), rng);
  if (kind == "random-regular")
    return random_regular_graph(spec.at("n").get<int>(), spec.at("d").get<int>(), rng);
  throw input_error("graph spec: unknown kind " + kind);
}

Csp2Instance instance_from_spec(const nlohmann::json& spec, std::mt19937_64& rng) {
  std::string kind = spec.at("kind").get<std::string>();
  if (kind == "inline") return Csp2Instance::from_json(spec.at("instance"));
  if (kind == "max-cut") return max_cut_instance(graph_from_spec(spec.at("graph"), rng));
  if (kind == "planted-ug")
    return planted_ug_instance(graph_from_spec(spec.at("graph"), rng), spec.at("k").get<int>(),
                               spec.value("noise", 0.0), rng);
  if (kind == "disjoint-copies")
    return disjoint_copies(instance_from_spec(spec.at("base"), rng), spec.at("copies").get<int>());
  throw input_error("instance spec: unknown kind " + kind);
}

namespace {

RelaxationOptions relaxation_options_from_json(const nlohmann::json& j) {
  RelaxationOptions opts;
  opts.hierarchy = j.value("hierarchy", std::string("lasserre")) == "weak" ? Hierarchy::weak
                                                                           : Hierarchy::lasserre;
  opts.basis_cap = j.value("basis_cap", static_cast<std::size_t>(5000));
  opts.weak_rounds = j.value("weak_rounds", 3);
  opts.sampled_subsets = j.value("sampled_subsets", false);
  opts.sample_count = j.value("sample_count", 8);
  opts.sample_seed = j.value("sample_seed", static_cast<std::uint64_t>(1));
  return opts;
}

nlohmann::json relaxation_options_to_json(const RelaxationOptions& opts) {
  return nlohmann::json{
      {"hierarchy", opts.hierarchy == Hierarchy::weak ? "weak" : "lasserre"},
      {"basis_cap", opts.basis_cap},
      {"weak_rounds", opts.weak_rounds},
      {"sampled_subsets", opts.sampled_subsets},
      {"sample_count", opts.sample_count},
      {"sample_seed", opts.sample_seed}};
}

}  // namespace

nlohmann::json solution_to_json(const Csp2Instance& inst, const MomentMatrix& M,
                                const SolveReport& report, const RelaxationOptions& opts) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["instance"] = inst.to_json();
  j["depth"] = M.depth;
  j["options"] = relaxation_options_to_json(opts);
  j["report"] = report.to_json();
  j["objective"] = M.objective;
  j["psd_violation"] = M.psd_violation;
  j["consistency_violation"] = M.consistency_violation;
  nlohmann::json tables = nlohmann::json::object();
  for (const auto& [sub, tab] : *M.tables)
    tables[subset_key(sub)] = std::vector<double>(tab.data(), tab.data() + tab.size());
  j["tables"] = std::move(tables);
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : M.sampled_seeds) seeds.push_back(s);
  j["sampled_seeds"] = std::move(seeds);
  return j;
}

LoadedSolution solution_from_json(const nlohmann::json& artifact) {
  if (artifact.value("schema_version", -1) != kSchemaVersion)
    throw input_error("solution artifact: schema version mismatch");
  Csp2Instance inst = Csp2Instance::from_json(artifact.at("instance"));
  RelaxationOptions opts = relaxation_options_from_json(artifact.at("options"));
  int depth = artifact.at("depth").get<int>();
  RelaxationProblem prob = build_relaxation(inst, depth, opts);

  SubsetTables tables;
  for (const auto& [key, arr] : artifact.at("tables").items()) {
    Subset sub;
    if (!key.empty()) {
      std::stringstream ss(key);
      std::string part;
      while (std::getline(ss, part, ',')) sub.push_back(std::stoi(part));
    }
    auto vals = arr.get<std::vector<double>>();
    tables[sub] = Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
  }

  Eigen::VectorXd p(static_cast<Eigen::Index>(prob.variable_count()));
  std::size_t off = 0;
  for (const auto& sub : prob.stored_subsets()) {
    auto it = tables.find(sub);
    if (it == tables.end()) throw input_error("solution artifact: missing table {" +
                                              subset_key(sub) + "}");
    p.segment(static_cast<Eigen::Index>(off), it->second.size()) = it->second;
    off += static_cast<std::size_t>(it->second.size());
  }

  LoadedSolution out{inst, MomentMatrix{}, SolveReport{}, opts};
  out.moment.basis = prob.basis();
  out.moment.M = prob.assemble(p);
  out.moment.objective = artifact.at("objective").get<double>();
  out.moment.psd_violation = artifact.at("psd_violation").get<double>();
  out.moment.consistency_violation = artifact.at("consistency_violation").get<double>();
  out.moment.n = inst.n();
  out.moment.k = inst.k();
  out.moment.depth = depth;
  out.moment.hierarchy = opts.hierarchy;
  out.moment.tables = std::make_shared<SubsetTables>(std::move(tables));
  for (const auto& s : artifact.at("sampled_seeds"))
    out.moment.sampled_seeds.push_back(s.get<Subset>());

  const auto& rj = artifact.at("report");
  out.report.objective = rj.at("objective").get<double>();
  out.report.psd_violation = rj.at("psd_violation").get<double>();
  out.report.consistency_violation = rj.at("consistency_violation").get<double>();
  out.report.iterations = rj.at("iterations").get<int>();
  out.report.wall_time_ms = rj.at("wall_time_ms").get<double>();
  out.report.depth = rj.at("depth").get<int>();
  out.report.basis_size = rj.at("basis_size").get<std::size_t>();
  out.report.converged = rj.at("converged").get<bool>();
  return out;
}

nlohmann::json spectrum_json(const Csp2Instance& inst, const std::vector<double>& taus) {
  SpectralProfile prof = spectral_profile(inst.graph());
  nlohmann::json j;
  j["eigenvalues"] = std::vector<double>(prof.eigenvalues.data(),
                                         prof.eigenvalues.data() + prof.eigenvalues.size());
  nlohmann::json ranks = nlohmann::json::object();
  for (double tau : taus) {
    std::ostringstream key;
    key << tau;
    ranks[key.str()] = threshold_rank(prof, tau);
  }
  j["rank_at"] = std::move(ranks);
  return j;
}

std::vector<VerifyCheck> verify_run(const nlohmann::json& run_artifact) {
  std::vector<VerifyCheck> checks;
  auto add = [&](const std::string& name, bool pass, const std::string& detail) {
    checks.push_back({name, pass, detail});
  };

  LoadedSolution sol = solution_from_json(run_artifact.at("solution"));
  const Csp2Instance& inst = sol.instance;
  add("instance-valid", true, "parsed and validated");

  // moment residuals recomputed from the stored tables
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sol.moment.M);
  double psd = std::max(0.0, -es.eigenvalues().minCoeff());
  add("moment-psd", psd <= std::max(1e-6, sol.moment.psd_violation * 1.5 + 1e-12),
      "min-eig violation " + std::to_string(psd));

  LocalDistributionFamily family = extract_local_family(sol.moment);
  double worst_cons = 0;
  bool statdist_ok = true;
  double worst_stat = 0;
  for (int i = 0; i < inst.n(); ++i) {
    for (int j = i + 1; j < inst.n(); ++j) {
      if (!family.available({i, j})) continue;
      ProbTable pij = family.marginal({i, j});
      ProbTable pi = family.marginal({i});
      worst_cons = std::max(worst_cons,
                            statistical_distance(pij.marginalize({i}).p, pi.p));
      auto idn = check_statdist_cov_identity(family, i, j);
      worst_stat = std::max(worst_stat, std::abs(idn.lhs - idn.rhs));
      statdist_ok = statdist_ok && idn.pass;
    }
  }
  add("family-consistency", worst_cons <= 1e-5, "worst marginal gap " + std::to_string(worst_cons));
  add("statdist-cov-identity", statdist_ok, "worst gap " + std::to_string(worst_stat));

  double objective = 0;
  {
    double total = 0;
    for (const auto& c : inst.constraints()) total += c.w;
    for (const auto& c : inst.constraints()) {
      ProbTable pij = family.marginal({c.i, c.j});
      double sat = 0;
      for (int a = 0; a < inst.k(); ++a)
        for (int b = 0; b < inst.k(); ++b)
          if (c.rel.contains(a, b)) sat += pij.p[a * inst.k() + b];
      objective += c.w / total * sat;
    }
  }
  add("objective-match", std::abs(objective - sol.moment.objective) <= 1e-4,
      "table objective " + std::to_string(objective) + " vs stored " +
          std::to_string(sol.moment.objective));

  if (run_artifact.contains("rounding")) {
    const auto& rj = run_artifact.at("rounding");
    Assignment best{rj.at("best_assignment").get<Labels>()};
    double val = inst.value(best);
    double stored = rj.at("best_value").get<double>();
    add("assignment-value", std::abs(val - stored) <= 1e-12,
        "recomputed " + std::to_string(val) + " vs stored " + std::to_string(stored));

    double total = 1;
    for (int i = 0; i < inst.n() && total <= kEnumerationCap; ++i) total *= inst.k();
    if (total <= kEnumerationCap) {
      double opt = brute_force_optimum(inst).first;
      bool sandwich = stored <= opt + 1e-9 && opt <= sol.moment.objective + 2e-3;
      add("value-sandwich", sandwich,
          "rounded " + std::to_string(stored) + " <= opt " + std::to_string(opt) +
              " <= sdp " + std::to_string(sol.moment.objective) + " + 2e-3");
    }
  }

  // spectral invariants of the constraint graph
  try {
    spectral_profile(inst.graph());
    add("spectrum", true, "profile checks passed");
  } catch (const std::exception& e) {
    add("spectrum", false, e.what());
  }
  return checks;
}

namespace {

int worker_count() {
  if (const char* env = std::getenv("LASROUND_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

nlohmann::json execute_run(const nlohmann::json& runspec, std::uint64_t run_seed) {
  SeedStream stream(run_seed);
  auto gen_rng = stream.engine(0);
  Csp2Instance inst = instance_from_spec(runspec.at("instance"), gen_rng);

  RelaxationOptions ropts = relaxation_options_from_json(runspec);
  int depth = runspec.value("depth", 2);
  SolveOptions sopts;
  sopts.tol = runspec.value("tol", 1e-6);
  sopts.max_iter = runspec.value("max_iter", 20000);

  RelaxationProblem prob = build_relaxation(inst, depth, ropts);
  auto [moment, report] = solve(prob, sopts);

  RoundInstanceOptions round_opts;
  round_opts.strategy = strategy_from_string(runspec.value("strategy", std::string("random")));
  round_opts.trials = runspec.value("trials", 32);
  round_opts.rounds = runspec.value("rounds", 0);
  auto round_rng = stream.engine(1);
  RoundingRun rounding = round_instance(inst, moment, round_opts, round_rng);
  rounding.seed = run_seed;

  nlohmann::json rec;
  rec["solution"] = solution_to_json(inst, moment, report, ropts);
  rec["rounding"] = rounding.to_json();
  rec["spectrum"] = spectrum_json(inst, runspec.value("taus", std::vector<double>{0.5, 0.9}));
  return rec;
}

}  // namespace

nlohmann::json run_experiment(const nlohmann::json& config, std::ostream* log) {
  if (config.value("schema_version", kSchemaVersion) != kSchemaVersion)
    throw input_error("experiment config: schema version mismatch");
  std::uint64_t master = config.value("master_seed", static_cast<std::uint64_t>(1));
  SeedStream stream(master);
  const auto& runs = config.at("runs");

  std::vector<nlohmann::json> records(runs.size());
  std::vector<double> wall(runs.size(), 0.0);
  std::atomic<std::size_t> next{0};
  int workers = std::min<int>(worker_count(), static_cast<int>(runs.size()) == 0 ? 1
                                                : static_cast<int>(runs.size()));
  auto work = [&] {
    while (true) {
      std::size_t idx = next.fetch_add(1);
      if (idx >= runs.size()) break;
      auto t0 = std::chrono::steady_clock::now();
      try {
        records[idx] = execute_run(runs[idx], stream.derive(idx));
        records[idx]["id"] = runs[idx].value("id", "run-" + std::to_string(idx));
        records[idx]["failed"] = false;
      } catch (const std::exception& e) {
        records[idx] = {{"id", runs[idx].value("id", "run-" + std::to_string(idx))},
                        {"failed", true},
                        {"error", e.what()}};
      }
      wall[idx] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                      .count();
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();

  // timing (and the wall clock inside solve reports) lives in a separate
  // object so the report itself is byte-stable across reruns
  nlohmann::json report = nlohmann::json::array();
  nlohmann::json timing = nlohmann::json::array();
  for (std::size_t idx = 0; idx < records.size(); ++idx) {
    nlohmann::json rec = std::move(records[idx]);
    double solve_ms = 0;
    if (rec.contains("solution")) {
      solve_ms = rec["solution"]["report"].value("wall_time_ms", 0.0);
      rec["solution"]["report"]["wall_time_ms"] = 0.0;
    }
    timing.push_back({{"id", rec.value("id", "")},
                      {"wall_time_ms", wall[idx]},
                      {"solve_wall_time_ms", solve_ms}});
    report.push_back(std::move(rec));
    if (log) (*log) << "run " << idx << " done\n";
  }
  return nlohmann::json{{"schema_version", kSchemaVersion},
                        {"master_seed", master},
                        {"report", std::move(report)},
                        {"timing", std::move(timing)}};
}

std::string report_csv(const nlohmann::json& result) {
  std::ostringstream csv;
  csv << "schema_version,id,failed,n,k,unique_games,depth,hierarchy,basis_size,sdp_objective,"
         "psd_violation,consistency_violation,iterations,strategy,trials,rounds,best_value,"
         "independent_value,brute_force_opt,rank_at_0.5,rank_at_0.9\n";
  for (const auto& rec : result.at("report")) {
    csv << kSchemaVersion << ',' << rec.value("id", "") << ',' << rec.value("failed", false);
    if (rec.value("failed", false)) {
      csv << ",,,,,,,,,,,,,,,,,\n";
      continue;
    }
    const auto& sol = rec.at("solution");
    const auto& inst = sol.at("instance");
    const auto& rnd = rec.at("rounding");
    csv << ',' << inst.at("n").get<int>() << ',' << inst.at("k").get<int>() << ','
        << inst.value("unique_games", false) << ',' << sol.at("depth").get<int>() << ','
        << sol.at("options").at("hierarchy").get<std::string>() << ','
        << sol.at("report").at("basis_size").get<std::size_t>() << ','
        << sol.at("objective").get<double>() << ',' << sol.at("psd_violation").get<double>()
        << ',' << sol.at("consistency_violation").get<double>() << ','
        << sol.at("report").at("iterations").get<int>() << ','
        << rnd.at("strategy").get<std::string>() << ',' << rnd.at("trials").get<int>() << ','
        << rnd.at("rounds").get<int>() << ',' << rnd.at("best_value").get<double>() << ','
        << rnd.at("independent_value").get<double>() << ',';
    if (rnd.contains("brute_force_opt")) csv << rnd.at("brute_force_opt").get<double>();
    csv << ',';
    const auto& ranks = rec.at("spectrum").at("rank_at");
    csv << (ranks.contains("0.5") ? std::to_string(ranks.at("0.5").get<int>()) : "") << ','
        << (ranks.contains("0.9") ? std::to_string(ranks.at("0.9").get<int>()) : "") << '\n';
  }
  return csv.str();
}

}  // namespace lasround
