#include "bench.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace ialm;
using namespace ialm::bench;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const char* env = std::getenv("IALM_TEST_DATA");
  const fs::path root = env ? fs::path(env) : fs::temp_directory_path() / "ialm_test_data";
  const fs::path dir = root / ("cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RunConfig small_lcqp(const fs::path& dir, std::size_t trials) {
  RunConfig c = default_config(Experiment::lcqp);
  c.m = 3;
  c.n = 15;
  c.trials = trials;
  c.output_dir = dir.string();
  return c;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

#ifdef IALM_BENCH_EXE
int run_cli(const std::string& args, const fs::path& stdout_file) {
  const std::string cmd = std::string(IALM_BENCH_EXE) + " " + args + " > " +
                          stdout_file.string() + " 2> " + stdout_file.string() + ".err";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

}  // namespace

TEST(RunConfig, DefaultsMatchDocumentedValues) {
  const RunConfig c = default_config(Experiment::lcqp);
  EXPECT_EQ(c.solver.beta0, 0.01);
  EXPECT_EQ(c.solver.sigma, 3.0);
  EXPECT_EQ(c.solver.eps, 1e-3);
  EXPECT_EQ(c.solver.max_inner, 1000000u);
  EXPECT_EQ(c.m, 10);
  EXPECT_EQ(c.n, 200);
  EXPECT_EQ(c.trials, 10u);
  EXPECT_EQ(c.jobs, 1u);
  EXPECT_EQ(c.effective_seeds().size(), 10u);
  EXPECT_EQ(c.effective_seeds().front(), 1u);
}

TEST(RunConfig, ValidationRejectsBadValues) {
  RunConfig c = default_config(Experiment::lcqp);
  c.trials = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = default_config(Experiment::lcqp);
  c.m = 300;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = default_config(Experiment::custom);
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = default_config(Experiment::lcqp);
  c.curvature = "bogus";
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(RunConfig, JsonRoundTrip) {
  RunConfig c = default_config(Experiment::cluster);
  c.seeds = {3, 5};
  c.solver.policy = PowerGrowth{2.0, 3};
  c.solver.penalty_mode = true;
  c.r = 4;
  c.s = 7.5;
  const RunConfig back = config_from_json(nlohmann::json::parse(config_to_json(c).dump()));
  EXPECT_EQ(back.experiment, Experiment::cluster);
  EXPECT_EQ(back.seeds, c.seeds);
  EXPECT_EQ(back.r, 4);
  EXPECT_EQ(back.s, 7.5);
  EXPECT_TRUE(back.solver.penalty_mode);
  const auto* pg = std::get_if<PowerGrowth>(&back.solver.policy);
  ASSERT_NE(pg, nullptr);
  EXPECT_EQ(pg->m, 2.0);
  EXPECT_EQ(pg->q, 3u);
}

TEST(RunConfig, OutputDirectoryPrecedence) {
  RunConfig c;
  ::setenv(kOutputDirEnv, "/tmp/from_env", 1);
  EXPECT_EQ(c.resolved_output_dir(), "/tmp/from_env");
  c.output_dir = "explicit";
  EXPECT_EQ(c.resolved_output_dir(), "explicit");
  ::unsetenv(kOutputDirEnv);
  c.output_dir.clear();
  EXPECT_EQ(c.resolved_output_dir(), "ialm_out");
}

TEST(RunBenchmark, SummaryHasOneRowPerTrialPlusAverage) {
  const fs::path dir = fresh_dir("rows");
  const BenchmarkResult r = run_benchmark(small_lcqp(dir, 10));
  EXPECT_TRUE(r.all_success);
  const auto lines = lines_of(read_file(r.summary_file));
  ASSERT_EQ(lines.size(), 12u);
  EXPECT_EQ(lines[0], "trial,pres,dres,time,grad_evals,obj_evals,success");
  EXPECT_EQ(split(lines[11])[0], "avg");
  double mean_pres = 0.0;
  for (std::size_t i = 1; i <= 10; ++i) {
    const auto cells = split(lines[i]);
    EXPECT_EQ(std::stoull(cells[0]), i);
    mean_pres += std::stod(cells[1]);
    EXPECT_TRUE(fs::exists(dir / trial_file_name(i)));
  }
  mean_pres /= 10.0;
  EXPECT_NEAR(std::stod(split(lines[11])[1]), mean_pres, 1e-12);
}

TEST(RunBenchmark, RowsMatchSolverCertificates) {
  const fs::path dir = fresh_dir("cert");
  const BenchmarkResult r = run_benchmark(small_lcqp(dir, 2));
  for (const auto& row : r.rows) {
    EXPECT_TRUE(row.success);
    EXPECT_LE(row.pres, 1e-3);
    EXPECT_LE(row.dres, 1e-3);
    const auto doc = io::read_json_file((dir / trial_file_name(row.trial)).string());
    EXPECT_EQ(doc.at("final").at("pres").get<double>(), row.pres);
    EXPECT_EQ(doc.at("final").at("grad_evals").get<std::size_t>(), row.grad_evals);
    EXPECT_TRUE(doc.at("records").is_array());
    EXPECT_TRUE(doc.at("diagnostics").contains("feasibility_decay"));
  }
}

TEST(RunBenchmark, DeterministicAcrossRunsAndJobCounts) {
  const fs::path a_dir = fresh_dir("det_a");
  const fs::path b_dir = fresh_dir("det_b");
  RunConfig a = small_lcqp(a_dir, 4);
  RunConfig b = small_lcqp(b_dir, 4);
  b.jobs = 3;
  const BenchmarkResult ra = run_benchmark(a);
  const BenchmarkResult rb = run_benchmark(b);
  ASSERT_EQ(ra.rows.size(), rb.rows.size());
  for (std::size_t i = 0; i < ra.rows.size(); ++i) {
    EXPECT_EQ(ra.rows[i].trial, rb.rows[i].trial);
    EXPECT_EQ(ra.rows[i].pres, rb.rows[i].pres);
    EXPECT_EQ(ra.rows[i].dres, rb.rows[i].dres);
    EXPECT_EQ(ra.rows[i].grad_evals, rb.rows[i].grad_evals);
  }
}

TEST(RunBenchmark, SolverFailureBecomesFailedRow) {
  const fs::path dir = fresh_dir("fail");
  RunConfig c = small_lcqp(dir, 2);
  c.solver.max_outer = 1;
  c.solver.eps = 1e-12;
  const BenchmarkResult r = run_benchmark(c);
  EXPECT_FALSE(r.all_success);
  ASSERT_EQ(r.rows.size(), 2u);
  for (const auto& row : r.rows) EXPECT_FALSE(row.success);
}

TEST(RunBenchmark, UnwritableOutputIsIoError) {
  const fs::path dir = fresh_dir("blocked");
  std::ofstream(dir / "file") << "x";
  RunConfig c = small_lcqp(dir / "file" / "sub", 1);
  EXPECT_THROW(run_benchmark(c), IoError);
}

TEST(Report, EmptyDirectoryGivesHeaderOnly) {
  const fs::path dir = fresh_dir("empty");
  std::ostringstream out;
  const ReportResult r = emit_report(dir.string(), ReportFormat::csv, out);
  EXPECT_EQ(out.str(), "trial,pres,dres,time,grad_evals,obj_evals\n");
  EXPECT_TRUE(r.rows.empty());
}

TEST(Report, OneTrialGivesTwoLinesWithRecomputedResiduals) {
  const fs::path dir = fresh_dir("one");
  RunConfig c = small_lcqp(dir, 1);
  c.seeds = {7};
  const BenchmarkResult bench = run_benchmark(c);
  std::ostringstream out;
  const ReportResult r = emit_report(dir.string(), ReportFormat::csv, out);
  const auto lines = lines_of(out.str());
  ASSERT_EQ(lines.size(), 2u);
  const auto cells = split(lines[1]);
  EXPECT_EQ(cells[0], "7");
  EXPECT_TRUE(r.all_success);

  // independent recomputation at the stored final point
  const auto doc = io::read_json_file((dir / trial_file_name(7)).string());
  const LcqpInstance inst = generate_lcqp(3, 15, 1.0, 7);
  const ProblemSpec p = lcqp_problem(inst);
  const Vector x = io::vector_from_json(doc.at("final").at("x"), "x");
  const Vector y = io::vector_from_json(doc.at("final").at("y"), "y");
  const KktResidual kkt = kkt_residual(x, y, p);
  EXPECT_EQ(std::stod(cells[1]), kkt.pres);
  EXPECT_EQ(std::stod(cells[2]), kkt.dres);
  EXPECT_EQ(bench.rows[0].grad_evals, std::stoull(cells[4]));
}

TEST(Report, JsonModeReparsesToSameValues) {
  const fs::path dir = fresh_dir("json");
  run_benchmark(small_lcqp(dir, 3));
  std::ostringstream csv;
  std::ostringstream js;
  const ReportResult rc = emit_report(dir.string(), ReportFormat::csv, csv);
  emit_report(dir.string(), ReportFormat::json, js);
  const auto arr = nlohmann::json::parse(js.str());
  ASSERT_EQ(arr.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(arr[i].at("trial").get<std::uint64_t>(), rc.rows[i].trial);
    EXPECT_EQ(arr[i].at("pres").get<double>(), rc.rows[i].pres);
    EXPECT_EQ(arr[i].at("dres").get<double>(), rc.rows[i].dres);
    EXPECT_EQ(arr[i].at("grad_evals").get<std::size_t>(), rc.rows[i].grad_evals);
  }
}

TEST(Report, TamperedFinalPointFailsReverification) {
  const fs::path dir = fresh_dir("tamper");
  run_benchmark(small_lcqp(dir, 1));
  const fs::path file = dir / trial_file_name(1);
  auto doc = io::read_json_file(file.string());
  doc["final"]["x"][0] = doc["final"]["x"][0].get<double>() + 0.5;
  io::write_json_file(file.string(), doc);
  std::ostringstream out;
  const ReportResult r = emit_report(dir.string(), ReportFormat::csv, out);
  ASSERT_EQ(r.rows.size(), 1u);
  EXPECT_FALSE(r.all_success);
  EXPECT_GT(r.rows[0].pres + r.rows[0].dres, 1e-3);
}

TEST(Report, MalformedFileNamed) {
  const fs::path dir = fresh_dir("malformed");
  std::ofstream(dir / "trial_3.json") << "{\"format_version\": 1, \"seed\": 3}";
  std::ostringstream out;
  try {
    emit_report(dir.string(), ReportFormat::csv, out);
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    EXPECT_NE(std::string(e.what()).find("trial_3.json"), std::string::npos);
  }
  EXPECT_THROW(emit_report((dir / "missing").string(), ReportFormat::csv, out), IoError);
}

#ifdef IALM_BENCH_EXE
TEST(CliExecutable, BenchThenReport) {
  const fs::path dir = fresh_dir("exe");
  const fs::path out = dir / "stdout.txt";
  ASSERT_EQ(run_cli("bench-lcqp --m 3 --n 15 --trials 2 --out " + (dir / "run").string(), out), 0);
  const auto bench_lines = lines_of(read_file(out));
  ASSERT_EQ(bench_lines.size(), 4u);
  EXPECT_EQ(split(bench_lines[3])[0], "avg");
  ASSERT_EQ(run_cli("report " + (dir / "run").string(), out), 0);
  const auto report_lines = lines_of(read_file(out));
  ASSERT_EQ(report_lines.size(), 3u);
  EXPECT_EQ(report_lines[0], "trial,pres,dres,time,grad_evals,obj_evals");
}

TEST(CliExecutable, SolveFromConfigWithFlagOverride) {
  const fs::path dir = fresh_dir("exe_solve");
  RunConfig c = small_lcqp(dir / "ignored", 5);
  io::write_json_file((dir / "config.json").string(), config_to_json(c));
  const fs::path out = dir / "stdout.txt";
  ASSERT_EQ(run_cli("solve " + (dir / "config.json").string() + " --trials 1 --out " +
                        (dir / "run").string(),
                    out),
            0);
  EXPECT_EQ(lines_of(read_file(out)).size(), 3u);
  EXPECT_TRUE(fs::exists(dir / "run" / "trial_1.json"));
  EXPECT_FALSE(fs::exists(dir / "run" / "trial_2.json"));
}

TEST(CliExecutable, ExitCodes) {
  const fs::path dir = fresh_dir("exe_codes");
  const fs::path out = dir / "stdout.txt";
  // unattainable tolerance within one outer iteration
  EXPECT_EQ(run_cli("bench-lcqp --m 3 --n 15 --trials 1 --max-outer 1 --eps 1e-12 --out " +
                        (dir / "fail").string(),
                    out),
            1);
  EXPECT_EQ(run_cli("bench-lcqp --m 30 --n 15 --out " + (dir / "bad").string(), out), 2);
  std::ofstream(dir / "broken.json") << "{ not json";
  EXPECT_EQ(run_cli("solve " + (dir / "broken.json").string(), out), 2);
  EXPECT_EQ(run_cli("solve " + (dir / "missing.json").string(), out), 3);
  EXPECT_EQ(run_cli("report " + (dir / "nowhere").string(), out), 3);
  EXPECT_EQ(run_cli("bench-lcqp --policy bogus", out), 2);
  EXPECT_EQ(run_cli("--help", out), 0);
}
#endif
