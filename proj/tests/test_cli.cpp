#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#ifndef ZOSS_CLI_PATH
#define ZOSS_CLI_PATH "./zoss"
#endif

namespace fs = std::filesystem;

namespace {

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CommandResult run_command(const std::string& args) {
  const std::string cmd = std::string(ZOSS_CLI_PATH) + " " + args + " 2>&1";
  CommandResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  while (std::size_t n = std::fread(buf, 1, sizeof(buf), pipe)) result.output.append(buf, n);
  const int status = pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "zoss_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kRunConfig = R"([problem]
name = ABS
dim = 1

[run]
iterations = 2000
seed = 5
stride = 100
probe_stride = 1000

[experiment]
seeds = 10
eps_gap = 0.5
)";

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("catalog lists the built-in problems") {
  const CommandResult result = run_command("catalog");
  CHECK(result.exit_code == 0);
  for (const char* name : {"ABS", "NEGABS", "DOUBLEWELL", "FINITEMAX", "NNL1"})
    CHECK(result.output.find(name) != std::string::npos);
}

TEST_CASE("missing config file exits 2 and names the path") {
  const CommandResult result = run_command("run --config /no/such/file.ini --out /tmp/zoss_none");
  CHECK(result.exit_code == 2);
  CHECK(result.output.find("/no/such/file.ini") != std::string::npos);
}

TEST_CASE("run is reproducible byte for byte") {
  const fs::path dir = fresh_dir("run_repro");
  write_file(dir / "config.ini", kRunConfig);

  const std::string base =
      "run --config " + (dir / "config.ini").string() + " --out " + (dir / "a").string();
  CHECK(run_command(base).exit_code == 0);
  CHECK(run_command("run --config " + (dir / "config.ini").string() + " --out " +
                    (dir / "b").string() + " --jobs 4")
            .exit_code == 0);
  const std::string trace_a = read_file(dir / "a" / "trace.csv");
  const std::string trace_b = read_file(dir / "b" / "trace.csv");
  CHECK(trace_a == trace_b);
  CHECK(trace_a.find("n,t,x_0,y_0,gap,track_err,f") == 0);

  // Overwrite protection without --force, override allowed with it.
  const CommandResult refuse = run_command(base);
  CHECK(refuse.exit_code == 2);
  CHECK(refuse.output.find("--force") != std::string::npos);
  CHECK(run_command(base + " --force").exit_code == 0);
  CHECK(read_file(dir / "a" / "trace.csv") == trace_a);

  // A different seed produces a different trace.
  CHECK(run_command("run --config " + (dir / "config.ini").string() + " --out " +
                    (dir / "c").string() + " --seed 6")
            .exit_code == 0);
  CHECK(read_file(dir / "c" / "trace.csv") != trace_a);
}

TEST_CASE("validate-schedule rejects a ratio violation with exit 2") {
  const fs::path dir = fresh_dir("schedule");
  write_file(dir / "bad.ini", "[problem]\nname = ABS\n[schedule]\np = 0.6\nq = 0.8\n");
  const CommandResult bad = run_command("validate-schedule --config " + (dir / "bad.ini").string());
  CHECK(bad.exit_code == 2);
  CHECK(bad.output.find("(e)") != std::string::npos);
  CHECK(bad.output.find("ratio") != std::string::npos);

  write_file(dir / "good.ini", "[problem]\nname = ABS\n");
  const CommandResult good =
      run_command("validate-schedule --config " + (dir / "good.ini").string());
  CHECK(good.exit_code == 0);
  CHECK(good.output.find("PASS") != std::string::npos);
}

TEST_CASE("a failed experiment assertion exits 1") {
  const fs::path dir = fresh_dir("converge_fail");
  // Gap threshold no run this short can meet.
  write_file(dir / "config.ini",
             "[problem]\nname = ABS\ndim = 1\n[run]\niterations = 200\nstride = 100\n"
             "probe_stride = 200\n[experiment]\nseeds = 10\neps_gap = 0.000001\n");
  const CommandResult result = run_command("converge --config " + (dir / "config.ini").string() +
                                           " --out " + (dir / "out").string());
  CHECK(result.exit_code == 1);
  CHECK(result.output.find("FAIL") != std::string::npos);
}

TEST_CASE("converge output is independent of the job count") {
  const fs::path dir = fresh_dir("converge_jobs");
  write_file(dir / "config.ini", kRunConfig);
  const std::string cfg = (dir / "config.ini").string();
  CHECK(run_command("converge --config " + cfg + " --out " + (dir / "j1").string() + " --jobs 1")
            .exit_code == 0);
  CHECK(run_command("converge --config " + cfg + " --out " + (dir / "j2").string() + " --jobs 2")
            .exit_code == 0);
  CHECK(read_file(dir / "j1" / "converge.csv") == read_file(dir / "j2" / "converge.csv"));
}

}  // TEST_SUITE
