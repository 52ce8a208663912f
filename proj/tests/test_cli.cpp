#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <map>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const std::string cli = MEDLEARN_CLI_PATH;

int run(const std::string& args) {
  const std::string command = cli + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

}  // namespace

TEST_CASE("simulate writes dataset, truth and manifest deterministically") {
  TempDir dir("medlearn_cli_sim");
  const std::string args = "simulate --scenario simple-all --n 60 --d 4 --seed 5 --out " + dir.str();
  CHECK(run(args) == 0);
  std::map<std::string, std::string> first;
  for (const char* name : {"dataset.csv", "ground_truth.csv", "manifest.ini"}) {
    first[name] = slurp(dir.path / name);
  }
  CHECK(run(args) == 0);
  for (const auto& [name, content] : first) CHECK(slurp(dir.path / name) == content);
  CHECK(first["manifest.ini"].find("command = simulate") != std::string::npos);
}

TEST_CASE("replicate artifacts are byte-identical across reruns and job counts") {
  TempDir dir("medlearn_cli_rep");
  const std::string args =
      "replicate --scenario simple --n 100 --d 4 --learner cart --tsne-iters 250 "
      "--k-min 2 --k-max 3 --reps 2 --seed 9 --out " + dir.str();
  CHECK(run(args + " --jobs 1") == 0);
  std::map<std::string, std::string> first;
  for (const char* name :
       {"replications.csv", "hit_table.csv", "covariate_distribution.csv", "pleaf_ecdf.csv",
        "manifest.ini"}) {
    first[name] = slurp(dir.path / name);
  }
  CHECK(run(args + " --jobs 3") == 0);
  for (const auto& [name, content] : first) CHECK(slurp(dir.path / name) == content);
}

TEST_CASE("calibrate then replicate with decisions") {
  TempDir cal("medlearn_cli_cal"), rep("medlearn_cli_dec");
  const std::string base =
      " --n 100 --d 4 --learner cart --tsne-iters 250 --k-min 2 --k-max 3 --seed 3 ";
  CHECK(run("calibrate --scenario simple-null2" + base + "--reps 20 --alpha 0.1 --out " +
            cal.str()) == 0);
  CHECK(fs::exists(cal.path / "threshold.json"));
  CHECK(run("replicate --scenario simple-all" + base + "--reps 2 --threshold-file " +
            (cal.path / "threshold.json").string() + " --out " + rep.str()) == 0);
  const std::string csv = slurp(rep.path / "replications.csv");
  CHECK((csv.find("accepted") != std::string::npos ||
         csv.find("rejected") != std::string::npos));
}

TEST_CASE("fit on a csv without a mediator but mediator target is a config error") {
  TempDir dir("medlearn_cli_fit");
  fs::create_directories(dir.path);
  const fs::path csv = dir.path / "data.csv";
  {
    std::ofstream out(csv);
    out << "x1,x2,w,y\n";
    for (int i = 0; i < 40; ++i) {
      out << 0.1 * i << "," << 0.2 * i << "," << i % 2 << "," << (i % 2 ? 1.5 : 0.5) << "\n";
    }
  }
  const int code = run("fit --data " + csv.string() +
                       " --treatment-col w --outcome-col y --target mediator --tsne-iters 100 "
                       "--learner cart --k-min 2 --k-max 2 --seed 1 --out " +
                       (dir.path / "out").string());
  CHECK(code == 2);
}

TEST_CASE("fit runs on a csv dataset and writes selection artifacts") {
  TempDir dir("medlearn_cli_fit2");
  fs::create_directories(dir.path);
  const fs::path csv = dir.path / "data.csv";
  {
    std::ofstream out(csv);
    out << "x1,x2,w,y\n";
    unsigned state = 12345;
    auto next = [&state] {
      state = state * 1664525u + 1013904223u;
      return (state >> 8) / 16777216.0 - 0.5;
    };
    for (int i = 0; i < 80; ++i) {
      const double x1 = next(), x2 = next();
      const int w = i % 2;
      out << x1 << "," << x2 << "," << w << "," << x1 + (x1 > 0 ? 0.5 : 0.0) * w << "\n";
    }
  }
  CHECK(run("fit --data " + csv.string() +
            " --treatment-col w --outcome-col y --learner cart --tsne-iters 150 "
            "--k-min 2 --k-max 2 --seed 1 --out " +
            (dir.path / "out").string()) == 0);
  CHECK(fs::exists(dir.path / "out" / "selection.json"));
  CHECK(fs::exists(dir.path / "out" / "profiles.txt"));
  CHECK(fs::exists(dir.path / "out" / "effects.csv"));
  CHECK(fs::exists(dir.path / "out" / "manifest.ini"));
}

TEST_CASE("bad flags and missing files exit with documented codes") {
  TempDir dir("medlearn_cli_err");
  CHECK(run("replicate --scenario simple --definitely-not-a-flag --out " + dir.str()) == 2);
  CHECK(run("fit --scenario simple --threshold-file /nonexistent.json --tsne-iters 100 "
            "--learner cart --n 80 --d 4 --seed 1 --out " +
            dir.str()) == 8);
  CHECK(run("simulate --scenario bogus --out " + dir.str()) == 2);
}

TEST_CASE("surface command writes a grid csv") {
  TempDir dir("medlearn_cli_surf");
  CHECK(run("surface --scenario null --n 60 --d 4 --learner cart --reps 1 "
            "--grid-lo -0.5 --grid-hi 0.5 --grid-step 0.5 --seed 2 --out " +
            dir.str()) == 0);
  const std::string csv = slurp(dir.path / "surface.csv");
  CHECK(csv.find("cov1,cov2,mean_tau") == 0);
}

TEST_CASE("report aggregates replication csvs into ecdf artifacts") {
  TempDir rep("medlearn_cli_rep_for_report"), out("medlearn_cli_report");
  CHECK(run("replicate --scenario simple --n 100 --d 4 --learner cart --tsne-iters 250 "
            "--k-min 2 --k-max 3 --reps 2 --seed 9 --out " +
            rep.str()) == 0);
  CHECK(run("report --in " + (rep.path / "replications.csv").string() + " --out " + out.str()) ==
        0);
  CHECK(fs::exists(out.path / "ecdf.svg"));
}
