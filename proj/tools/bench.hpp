#pragma once

// Benchmark campaigns: run configuration, per-trial trajectory files, the
// summary CSV and the re-verifying report emitter.

#include "ialm/diagnostics.hpp"
#include "ialm/ialm.hpp"
#include "ialm/problems.hpp"
#include "instance_io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace ialm::bench {

using io::json;

/// Raised for unreadable or unwritable campaign files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment { lcqp, ev, cluster, custom };

inline const char* to_string(Experiment e) {
  switch (e) {
    case Experiment::lcqp: return "lcqp";
    case Experiment::ev: return "ev";
    case Experiment::cluster: return "cluster";
    case Experiment::custom: return "custom";
  }
  return "unknown";
}

inline Experiment parse_experiment(const std::string& s) {
  if (s == "lcqp") return Experiment::lcqp;
  if (s == "ev") return Experiment::ev;
  if (s == "cluster") return Experiment::cluster;
  if (s == "custom") return Experiment::custom;
  throw std::invalid_argument("unknown experiment '" + s + "' (lcqp, ev, cluster, custom)");
}

inline constexpr const char* kOutputDirEnv = "IALM_OUTPUT_DIR";

struct RunConfig {
  Experiment experiment = Experiment::lcqp;
  // lcqp: m x n with weak convexity rho; ev and cluster use n
  Index m = 10;
  Index n = 200;
  double rho = 1.0;
  // cluster: embedding columns, ball radius and the point source
  Index r = 6;
  double s = 100.0;
  std::string points_csv;
  Index dim = 4;
  Index clusters = 3;
  std::uint64_t points_seed = 1;
  // custom: path to an instance JSON file
  std::string instance_file;
  /// Explicit seeds; when empty, seeds 1..trials.
  std::vector<std::uint64_t> seeds;
  std::size_t trials = 10;
  IalmConfig solver;
  /// "default", "ledger", or "safe" (ev only).
  std::string curvature = "default";
  /// Empty: $IALM_OUTPUT_DIR, else "ialm_out".
  std::string output_dir;
  std::size_t jobs = 1;
  bool save_instances = false;

  std::vector<std::uint64_t> effective_seeds() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> out;
    for (std::size_t i = 1; i <= trials; ++i) out.push_back(i);
    return out;
  }

  std::string resolved_output_dir() const {
    if (!output_dir.empty()) return output_dir;
    if (const char* env = std::getenv(kOutputDirEnv); env && *env) return env;
    return "ialm_out";
  }

  void validate() const {
    detail::require(trials >= 1, "trials must be at least 1");
    detail::require(jobs >= 1, "jobs must be at least 1");
    solver.validate();
    detail::require(curvature == "default" || curvature == "ledger" || curvature == "safe",
                    "curvature must be default, ledger or safe");
    switch (experiment) {
      case Experiment::lcqp:
        detail::require(m >= 1 && m < n, "lcqp needs 1 <= m < n");
        detail::require(rho > 0.0, "lcqp needs rho > 0");
        break;
      case Experiment::ev: detail::require(n >= 2, "ev needs n >= 2"); break;
      case Experiment::cluster:
        detail::require(r >= 1 && s > 0.0, "cluster needs r >= 1 and s > 0");
        if (points_csv.empty()) {
          detail::require(n >= 2 && dim >= 1 && clusters >= 1, "cluster needs n >= 2, dim, clusters");
        }
        break;
      case Experiment::custom:
        detail::require(!instance_file.empty(), "custom experiment needs instance_file");
        break;
    }
  }
};

/// Defaults per experiment; ev and cluster sizes are the CI-friendly scales.
inline RunConfig default_config(Experiment e) {
  RunConfig c;
  c.experiment = e;
  if (e == Experiment::ev) {
    c.n = 200;
    c.trials = 1;
  }
  if (e == Experiment::cluster) {
    c.n = 40;
    c.trials = 1;
  }
  if (e == Experiment::custom) c.trials = 1;
  return c;
}

// ---------------------------------------------------------------------------
// JSON config

inline json policy_to_json(const DualStepPolicy& p) {
  json j{{"name", policy_name(p)}};
  if (const auto* t = std::get_if<Theoretical>(&p)) j["w0"] = t->w0;
  if (const auto* g = std::get_if<PowerGrowth>(&p)) {
    j["m"] = g->m;
    j["q"] = g->q;
  }
  return j;
}

inline DualStepPolicy policy_from_json(const json& j) {
  const std::string name = j.is_string() ? j.get<std::string>() : j.at("name").get<std::string>();
  const json params = j.is_object() ? j : json::object();
  if (name == "theoretical") return Theoretical{params.value("w0", 1.0)};
  if (name == "power") return PowerGrowth{params.value("m", 1.0), params.value("q", 0u)};
  if (name == "practical") return Practical{};
  throw std::invalid_argument("unknown policy '" + name + "' (theoretical, power, practical)");
}

inline json solver_to_json(const IalmConfig& s) {
  return {{"beta0", s.beta0},         {"sigma", s.sigma},
          {"eps", s.eps},             {"policy", policy_to_json(s.policy)},
          {"penalty_mode", s.penalty_mode}, {"max_outer", s.max_outer},
          {"max_inner", s.max_inner}, {"max_ppm", s.max_ppm},
          {"stall_guard", s.stall_guard}};
}

inline void solver_from_json(const json& j, IalmConfig& s) {
  s.beta0 = j.value("beta0", s.beta0);
  s.sigma = j.value("sigma", s.sigma);
  s.eps = j.value("eps", s.eps);
  if (j.contains("policy")) s.policy = policy_from_json(j.at("policy"));
  s.penalty_mode = j.value("penalty_mode", s.penalty_mode);
  s.max_outer = j.value("max_outer", s.max_outer);
  s.max_inner = j.value("max_inner", s.max_inner);
  s.max_ppm = j.value("max_ppm", s.max_ppm);
  s.stall_guard = j.value("stall_guard", s.stall_guard);
}

inline json config_to_json(const RunConfig& c) {
  json j{{"format_version", io::kFormatVersion},
         {"experiment", to_string(c.experiment)},
         {"m", c.m},
         {"n", c.n},
         {"rho", c.rho},
         {"r", c.r},
         {"s", c.s},
         {"points_csv", c.points_csv},
         {"dim", c.dim},
         {"clusters", c.clusters},
         {"points_seed", c.points_seed},
         {"instance_file", c.instance_file},
         {"seeds", c.effective_seeds()},
         {"trials", c.effective_seeds().size()},
         {"solver", solver_to_json(c.solver)},
         {"curvature", c.curvature},
         {"output_dir", c.output_dir},
         {"jobs", c.jobs},
         {"save_instances", c.save_instances}};
  return j;
}

/// Reads a config file; keys absent from the file keep the experiment defaults.
inline RunConfig config_from_json(const json& j) {
  io::check_version(j);
  RunConfig c = default_config(parse_experiment(j.value("experiment", std::string("lcqp"))));
  c.m = j.value("m", c.m);
  c.n = j.value("n", c.n);
  c.rho = j.value("rho", c.rho);
  c.r = j.value("r", c.r);
  c.s = j.value("s", c.s);
  c.points_csv = j.value("points_csv", c.points_csv);
  c.dim = j.value("dim", c.dim);
  c.clusters = j.value("clusters", c.clusters);
  c.points_seed = j.value("points_seed", c.points_seed);
  c.instance_file = j.value("instance_file", c.instance_file);
  if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  c.trials = j.value("trials", c.trials);
  if (j.contains("solver")) solver_from_json(j.at("solver"), c.solver);
  c.curvature = j.value("curvature", c.curvature);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.jobs = j.value("jobs", c.jobs);
  c.save_instances = j.value("save_instances", c.save_instances);
  return c;
}

// ---------------------------------------------------------------------------
// Instances

/// Everything needed to rebuild a trial's problem, stored in its JSON file.
inline json make_descriptor(const RunConfig& c, std::uint64_t seed) {
  json d{{"kind", to_string(c.experiment)}, {"seed", seed}, {"curvature", c.curvature}};
  switch (c.experiment) {
    case Experiment::lcqp:
      d["m"] = c.m;
      d["n"] = c.n;
      d["rho"] = c.rho;
      break;
    case Experiment::ev: d["n"] = c.n; break;
    case Experiment::cluster:
      d["r"] = c.r;
      d["s"] = c.s;
      if (!c.points_csv.empty()) {
        d["points_csv"] = c.points_csv;
      } else {
        d["n"] = c.n;
        d["dim"] = c.dim;
        d["clusters"] = c.clusters;
        d["points_seed"] = c.points_seed;
      }
      break;
    case Experiment::custom: d["instance"] = io::read_json_file(c.instance_file); break;
  }
  return d;
}

struct BuiltProblem {
  ProblemSpec problem;
  CurvatureSchedule schedule;
  /// Full instance, for --save-instances.
  json instance;
};

namespace builders {

inline BuiltProblem build_lcqp(const LcqpInstance& inst, const std::string& curvature) {
  BuiltProblem b{lcqp_problem(inst), {}, io::to_json(inst)};
  if (curvature == "default") b.schedule = lcqp_exact_schedule(inst);
  return b;
}

inline BuiltProblem build_ev(const EvInstance& inst, const std::string& curvature) {
  BuiltProblem b{ev_problem(inst), {}, io::to_json(inst)};
  if (curvature == "default") b.schedule = ev_default_tuning(inst).schedule();
  if (curvature == "safe") b.schedule = ev_safe_tuning(inst).schedule();
  return b;
}

inline BuiltProblem build_cluster(const ClusteringInstance& inst, std::uint64_t seed,
                                  const std::string& curvature) {
  BuiltProblem b{clustering_problem(inst, seed), {}, io::to_json(inst)};
  if (curvature == "default") b.schedule = clustering_default_tuning(inst).schedule();
  return b;
}

}  // namespace builders

inline BuiltProblem build_problem(const json& d) {
  const std::string kind = d.at("kind").get<std::string>();
  const auto seed = d.at("seed").get<std::uint64_t>();
  const std::string curvature = d.value("curvature", std::string("default"));
  if (curvature == "safe" && kind != "ev" &&
      !(kind == "custom" && d.at("instance").value("kind", std::string()) == "ev")) {
    throw std::invalid_argument("curvature 'safe' is only defined for ev instances");
  }
  if (kind == "lcqp") {
    return builders::build_lcqp(
        generate_lcqp(d.at("m").get<Index>(), d.at("n").get<Index>(), d.at("rho").get<double>(),
                      seed),
        curvature);
  }
  if (kind == "ev") return builders::build_ev(generate_ev(d.at("n").get<Index>(), seed), curvature);
  if (kind == "cluster") {
    const Matrix points =
        d.contains("points_csv")
            ? load_points_csv(d.at("points_csv").get<std::string>())
            : synthetic_points(d.at("n").get<Index>(), d.at("dim").get<Index>(),
                               d.at("clusters").get<Index>(), d.at("points_seed").get<std::uint64_t>());
    return builders::build_cluster(
        make_clustering(points, d.at("r").get<Index>(), d.at("s").get<double>()), seed, curvature);
  }
  if (kind == "custom") {
    const json& inst = d.at("instance");
    const std::string ik = inst.value("kind", std::string());
    if (ik == "lcqp") return builders::build_lcqp(io::lcqp_from_json(inst), curvature);
    if (ik == "ev") return builders::build_ev(io::ev_from_json(inst), curvature);
    if (ik == "cluster") return builders::build_cluster(io::clustering_from_json(inst), seed, curvature);
    throw std::invalid_argument("instance kind must be lcqp, ev or cluster");
  }
  throw std::invalid_argument("unknown instance kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// Trials

struct TrialRow {
  std::uint64_t trial = 0;
  double pres = std::numeric_limits<double>::quiet_NaN();
  double dres = std::numeric_limits<double>::quiet_NaN();
  double time = 0.0;
  std::size_t grad_evals = 0;
  std::size_t obj_evals = 0;
  bool success = false;
};

struct TrialOutcome {
  TrialRow row;
  std::string status;
  std::string reason;
  json document;
  /// Full instance when save_instances is set.
  json instance;
};

inline json record_to_json(const OuterIterationRecord& r) {
  return {{"k", r.k},
          {"beta", r.beta},
          {"w", r.w},
          {"rho_hat", r.rho_hat},
          {"l_hat", r.l_hat},
          {"pres", r.pres},
          {"dres", r.dres},
          {"dres_is_upper_bound", r.dres_is_upper_bound},
          {"dres_running", r.dres_running},
          {"y_norm", r.y_norm},
          {"ppm_iterations", r.ppm_iterations},
          {"apg_iterations", r.apg_iterations},
          {"grad_evals", r.grad_evals},
          {"obj_evals", r.obj_evals},
          {"elapsed", r.elapsed}};
}

/// Diagnostics verdicts for a finished run.
inline json diagnostics_json(const SolveReport& report, const ProblemSpec& problem,
                             const IalmConfig& solver) {
  json out = json::object();
  if (report.records.size() >= 3) {
    const FeasibilityDecayVerdict v = check_feasibility_decay(report, solver.sigma);
    out["feasibility_decay"] = {{"applicable", true},
                                {"pass", v.pass},
                                {"constant", v.constant},
                                {"max_after_burn_in", v.max_after_burn_in},
                                {"message", v.message}};
  } else {
    out["feasibility_decay"] = {{"applicable", false},
                                {"message", "needs at least 3 outer iterations"}};
  }

  const RegularityTrace trace = estimate_regularity_v(report, problem);
  const std::optional<double> v_min = trace.minimum();
  json reg{{"supported", trace.supported}, {"message", trace.message}};
  reg["min"] = v_min ? json(*v_min) : json(nullptr);
  out["regularity"] = reg;

  std::optional<double> y_max;
  std::string y_source;
  const auto* theo = std::get_if<Theoretical>(&solver.policy);
  if (theo && !solver.penalty_mode) {
    y_max = dual_norm_bound(theo->w0, report.initial_c_norm);
    y_source = "dual_norm_bound";
    out["dual_bound"] = {{"y_max", *y_max},
                         {"max_y_norm", report.max_y_norm()},
                         {"holds", report.max_y_norm() <= *y_max}};
  } else {
    y_max = report.max_y_norm();
    y_source = "observed";
  }

  const ConstantsLedger& led = problem.constants;
  if (v_min && *v_min > 0.0 && std::isfinite(led.b0) && std::isfinite(led.b_c)) {
    const std::size_t k = predict_outer_iterations(solver.eps, led.b0, led.b_c, *y_max, *v_min,
                                                   solver.beta0, solver.sigma);
    out["predicted_outer_iterations"] = {{"k", k},
                                         {"executed", report.records.size()},
                                         {"y_max_source", y_source},
                                         {"holds", report.records.size() <= k}};
  }
  return out;
}

inline TrialOutcome run_trial(const RunConfig& config, std::uint64_t seed) {
  TrialOutcome out;
  out.row.trial = seed;
  json doc{{"format_version", io::kFormatVersion},
           {"experiment", to_string(config.experiment)},
           {"seed", seed},
           {"solver", solver_to_json(config.solver)}};
  try {
    doc["instance"] = make_descriptor(config, seed);
    BuiltProblem built = build_problem(doc["instance"]);
    if (config.save_instances) out.instance = built.instance;
    IalmConfig solver = config.solver;
    solver.curvature_override = built.schedule;
    solver.record_iterates = true;
    const SolveReport report = ialm_solve(built.problem, solver);

    out.row.pres = report.kkt.pres;
    out.row.dres = report.kkt.dres;
    out.row.time = report.elapsed;
    out.row.grad_evals = report.counters.gradient;
    out.row.obj_evals = report.counters.objective;
    out.row.success = report.success;
    out.status = to_string(report.status);
    out.reason = report.reason;

    json records = json::array();
    for (const auto& r : report.records) records.push_back(record_to_json(r));
    doc["records"] = std::move(records);
    doc["diagnostics"] = diagnostics_json(report, built.problem, config.solver);
    doc["final"] = {{"x", io::vector_to_json(report.x)},
                    {"y", io::vector_to_json(report.y)},
                    {"y_running", io::vector_to_json(report.y_running)},
                    {"subgradient", io::vector_to_json(report.subgradient)},
                    {"pres", report.kkt.pres},
                    {"dres", report.kkt.dres},
                    {"dres_is_upper_bound", report.kkt.dres_is_upper_bound},
                    {"outer_iterations", report.records.size()},
                    {"time", report.elapsed},
                    {"grad_evals", report.counters.gradient},
                    {"obj_evals", report.counters.objective},
                    {"success", report.success},
                    {"status", out.status},
                    {"reason", out.reason}};
  } catch (const IoError&) {
    throw;
  } catch (const std::exception& e) {
    out.status = "error";
    out.reason = e.what();
    doc["final"] = {{"success", false}, {"status", out.status}, {"reason", out.reason}};
  }
  out.document = std::move(doc);
  return out;
}

struct BenchmarkResult {
  std::vector<TrialRow> rows;
  std::vector<std::string> trial_files;
  std::string summary_file;
  bool all_success = true;
};

inline std::string trial_file_name(std::uint64_t seed) {
  return "trial_" + std::to_string(seed) + ".json";
}

inline const char* kTrialHeader = "trial,pres,dres,time,grad_evals,obj_evals";

inline std::string trial_csv_line(const TrialRow& r) {
  return std::to_string(r.trial) + "," + io::format_double(r.pres) + "," +
         io::format_double(r.dres) + "," + io::format_double(r.time) + "," +
         std::to_string(r.grad_evals) + "," + std::to_string(r.obj_evals);
}

/// Summary CSV: one row per trial plus an "avg" row of column means.
inline std::string summary_csv(const std::vector<TrialRow>& rows) {
  std::ostringstream out;
  out << kTrialHeader << ",success\n";
  double pres = 0.0, dres = 0.0, time = 0.0, grad = 0.0, obj = 0.0, ok = 0.0;
  for (const auto& r : rows) {
    out << trial_csv_line(r) << ',' << (r.success ? 1 : 0) << '\n';
    pres += r.pres;
    dres += r.dres;
    time += r.time;
    grad += static_cast<double>(r.grad_evals);
    obj += static_cast<double>(r.obj_evals);
    ok += r.success ? 1.0 : 0.0;
  }
  if (!rows.empty()) {
    const double n = static_cast<double>(rows.size());
    out << "avg," << io::format_double(pres / n) << ',' << io::format_double(dres / n) << ','
        << io::format_double(time / n) << ',' << io::format_double(grad / n) << ','
        << io::format_double(obj / n) << ',' << io::format_double(ok / n) << '\n';
  }
  return out.str();
}

/// Runs every seed, writes trial_<seed>.json files and summary.csv into the
/// output directory. Solver failures become failed rows; I/O errors throw.
inline BenchmarkResult run_benchmark(const RunConfig& config) {
  config.validate();
  namespace fs = std::filesystem;
  const fs::path dir = config.resolved_output_dir();
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string());
  }

  const std::vector<std::uint64_t> seeds = config.effective_seeds();
  std::vector<TrialOutcome> outcomes(seeds.size());
  std::atomic<std::size_t> next{0};
  std::mutex error_mutex;
  std::string first_error;
  auto worker = [&] {
    for (std::size_t i = next++; i < seeds.size(); i = next++) {
      try {
        outcomes[i] = run_trial(config, seeds[i]);
        if (!outcomes[i].instance.is_null()) {
          io::write_json_file((dir / ("instance_" + std::to_string(seeds[i]) + ".json")).string(),
                              outcomes[i].instance);
        }
        io::write_json_file((dir / trial_file_name(seeds[i])).string(), outcomes[i].document);
      } catch (const std::exception& e) {
        const std::lock_guard lock(error_mutex);
        if (first_error.empty()) first_error = e.what();
      }
    }
  };
  const std::size_t workers = std::min(config.jobs, seeds.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (!first_error.empty()) throw IoError(first_error);

  BenchmarkResult result;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    result.rows.push_back(outcomes[i].row);
    result.trial_files.push_back((dir / trial_file_name(seeds[i])).string());
    result.all_success = result.all_success && outcomes[i].row.success;
  }
  result.summary_file = (dir / "summary.csv").string();
  std::ofstream out(result.summary_file);
  if (!out) throw IoError("cannot write " + result.summary_file);
  out << summary_csv(result.rows);
  if (!out) throw IoError("write failed: " + result.summary_file);
  return result;
}

// ---------------------------------------------------------------------------
// Report

enum class ReportFormat { csv, json };

struct ReportResult {
  std::vector<TrialRow> rows;
  bool all_success = true;
};

/// Re-verifies one trial file: rebuilds the instance and recomputes the
/// residuals at the stored final point.
inline TrialRow verify_trial(const std::string& path) {
  const json doc = io::read_json_file(path);
  try {
    io::check_version(doc);
    TrialRow row;
    row.trial = doc.at("seed").get<std::uint64_t>();
    const json& fin = doc.at("final");
    if (!fin.contains("x")) {
      row.success = false;
      return row;
    }
    const BuiltProblem built = build_problem(doc.at("instance"));
    const Vector x = io::vector_from_json(fin.at("x"), "x");
    const Vector y = io::vector_from_json(fin.at("y"), "y");
    const Vector witness = io::vector_from_json(fin.at("subgradient"), "subgradient");
    if (x.size() != built.problem.dimension() || y.size() != built.problem.constraint_count()) {
      throw std::invalid_argument("final point does not match the instance dimensions");
    }
    const KktResidual kkt =
        kkt_residual(x, y, built.problem, witness.size() == x.size() ? &witness : nullptr);
    const double eps = doc.at("solver").at("eps").get<double>();
    row.pres = kkt.pres;
    row.dres = kkt.dres;
    row.time = fin.at("time").get<double>();
    row.grad_evals = fin.at("grad_evals").get<std::size_t>();
    row.obj_evals = fin.at("obj_evals").get<std::size_t>();
    row.success = fin.at("success").get<bool>() && kkt.pres <= eps && kkt.dres <= eps;
    return row;
  } catch (const std::exception& e) {
    throw IoError(path + ": malformed trial report: " + e.what());
  }
}

/// Reads every trial_*.json in `dir` (ordered by seed) and writes the
/// re-verified table to `out`.
inline ReportResult emit_report(const std::string& dir, ReportFormat format, std::ostream& out) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("trial_") && name.ends_with(".json")) {
      files.push_back(entry.path().string());
    }
  }
  ReportResult result;
  for (const auto& f : files) result.rows.push_back(verify_trial(f));
  std::sort(result.rows.begin(), result.rows.end(),
            [](const TrialRow& a, const TrialRow& b) { return a.trial < b.trial; });
  for (const auto& r : result.rows) result.all_success = result.all_success && r.success;

  if (format == ReportFormat::csv) {
    out << kTrialHeader << '\n';
    for (const auto& r : result.rows) out << trial_csv_line(r) << '\n';
  } else {
    json arr = json::array();
    for (const auto& r : result.rows) {
      arr.push_back({{"trial", r.trial},
                     {"pres", r.pres},
                     {"dres", r.dres},
                     {"time", r.time},
                     {"grad_evals", r.grad_evals},
                     {"obj_evals", r.obj_evals}});
    }
    out << arr.dump(1) << '\n';
  }
  return result;
}

}  // namespace ialm::bench
