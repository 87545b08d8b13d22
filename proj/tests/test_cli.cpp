#include <sys/wait.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <doctest.h>

#include "msc/matrix.hpp"
#include "msc/rng.hpp"

namespace {

namespace fs = std::filesystem;

// Scratch directory for one test case, removed on destruction.
struct Workspace {
  fs::path dir;

  explicit Workspace(const std::string& tag) {
    dir = fs::temp_directory_path() / ("msc_cli_" + tag);
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Workspace() { fs::remove_all(dir); }

  std::string path(const std::string& name) const { return (dir / name).string(); }
};

int run_cli(const std::string& args, const std::string& log) {
  const std::string cmd = std::string(MSC_CLI_PATH) + " " + args + " > " + log + " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

msc::Matrix small_data(std::uint64_t seed) {
  msc::Rng rng(seed);
  msc::Matrix xs(6, 20);
  for (auto& v : xs.data()) v = rng.normal();
  return xs;
}

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  REQUIRE(is.good());
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("cli rejects missing subcommands and unknown flags with the config exit code") {
  Workspace ws("parse");
  CHECK(run_cli("", ws.path("log0.txt")) == 2);
  CHECK(run_cli("train-dict --no-such-flag", ws.path("log1.txt")) == 2);
  CHECK(run_cli("train-dict --k 4", ws.path("log2.txt")) == 2);  // no modality given
}

TEST_CASE("cli distinguishes data errors from config errors") {
  Workspace ws("errors");
  // Absent input file: a data problem, not a usage problem.
  CHECK(run_cli("train-dict --k 4 --modality a=" + ws.path("missing.msc"), ws.path("log0.txt")) == 3);

  msc::save_matrix(small_data(1), ws.path("xs.msc"));
  // K-SVD without a sparsity budget is a configuration error.
  CHECK(run_cli("train-dict --method ksvd --k 4 --modality a=" + ws.path("xs.msc"),
                ws.path("log1.txt")) == 2);
  // Unknown config keys are rejected rather than ignored.
  std::ofstream(ws.path("bad.json")) << "{\"mystery\": 1}\n";
  CHECK(run_cli("train-dict --k 4 --modality a=" + ws.path("xs.msc") + " --config " + ws.path("bad.json"),
                ws.path("log2.txt")) == 2);
}

TEST_CASE("cli trains, encodes, and keeps byte-level determinism") {
  Workspace ws("pipeline");
  msc::save_matrix(small_data(2), ws.path("xs.msc"));
  const std::string train_args = "train-dict --k 8 --lambda 0.3 --epochs 2 --seed 5 --modality a=" +
                                 ws.path("xs.msc") + " --out ";

  REQUIRE(run_cli(train_args + ws.path("run1"), ws.path("log1.txt")) == 0);
  REQUIRE(fs::exists(ws.path("run1") + "/dict.msc"));
  REQUIRE(fs::exists(ws.path("run1") + "/dict.json"));

  SUBCASE("the same seed writes the same bytes") {
    REQUIRE(run_cli(train_args + ws.path("run2"), ws.path("log2.txt")) == 0);
    CHECK(read_file(ws.path("run1") + "/dict.msc") == read_file(ws.path("run2") + "/dict.msc"));
    CHECK(read_file(ws.path("run1") + "/dict.json") == read_file(ws.path("run2") + "/dict.json"));
  }
  SUBCASE("encoding produces a dense code matrix of the dictionary width") {
    REQUIRE(run_cli("encode --dict " + ws.path("run1") + "/dict --modality a=" + ws.path("xs.msc") +
                        " --out " + ws.path("codes"),
                    ws.path("log3.txt")) == 0);
    const msc::Matrix codes = msc::load_matrix(ws.path("codes") + "/codes.msc");
    CHECK(codes.rows() == 8);
    CHECK(codes.cols() == 20);
  }
  SUBCASE("zero input encodes to the zero matrix") {
    msc::Matrix zeros(6, 5);
    msc::save_matrix(zeros, ws.path("zeros.msc"));
    REQUIRE(run_cli("encode --dict " + ws.path("run1") + "/dict --modality a=" + ws.path("zeros.msc") +
                        " --out " + ws.path("zcodes"),
                    ws.path("log4.txt")) == 0);
    const msc::Matrix codes = msc::load_matrix(ws.path("zcodes") + "/codes.msc");
    for (double v : codes.data()) CHECK(v == 0.0);
  }
  SUBCASE("cross-modal encoding against a unimodal dictionary is a usage error") {
    CHECK(run_cli("encode --dict " + ws.path("run1") + "/dict --cross-modal b --modality a=" +
                      ws.path("xs.msc") + " --out " + ws.path("bad"),
                  ws.path("log5.txt")) == 2);
  }
}

TEST_CASE("cli joint training enables cross-modal encoding") {
  Workspace ws("joint");
  msc::save_matrix(small_data(3), ws.path("xa.msc"));
  msc::save_matrix(small_data(4), ws.path("xb.msc"));

  REQUIRE(run_cli("train-dict --k 10 --lambda 0.3 --epochs 2 --seed 6 --modality a=" + ws.path("xa.msc") +
                      " --modality b=" + ws.path("xb.msc") + " --out " + ws.path("joint"),
                  ws.path("log0.txt")) == 0);
  CHECK(run_cli("encode --dict " + ws.path("joint") + "/dict --cross-modal a --modality a=" +
                    ws.path("xa.msc") + " --out " + ws.path("cross"),
                ws.path("log1.txt")) == 0);
  const msc::Matrix codes = msc::load_matrix(ws.path("cross") + "/codes.msc");
  CHECK(codes.rows() == 10);
  CHECK(codes.cols() == 20);

  SUBCASE("ksvd joint training is refused") {
    CHECK(run_cli("train-dict --method ksvd --sparsity 2 --k 10 --modality a=" + ws.path("xa.msc") +
                      " --modality b=" + ws.path("xb.msc") + " --out " + ws.path("bad"),
                  ws.path("log2.txt")) == 2);
  }
}

TEST_CASE("cli reads csv input and config files with flag precedence") {
  Workspace ws("csv");
  {
    std::ofstream os(ws.path("xs.csv"));
    msc::Rng rng(7);
    for (int i = 0; i < 6; ++i) {  // 6 rows, 20 columns
      for (int j = 0; j < 20; ++j) os << (j ? "," : "") << rng.normal();
      os << '\n';
    }
  }
  std::ofstream(ws.path("cfg.json")) << "{\"k\": 8, \"lambda\": 0.3, \"epochs\": 2, \"seed\": 9}\n";

  REQUIRE(run_cli("train-dict --modality a=" + ws.path("xs.csv") + " --config " + ws.path("cfg.json") +
                      " --out " + ws.path("out1"),
                  ws.path("log0.txt")) == 0);
  const msc::Matrix d1 = msc::load_matrix(ws.path("out1") + "/dict.msc");
  CHECK(d1.cols() == 8);

  // An explicit flag overrides the same key from the file.
  REQUIRE(run_cli("train-dict --k 5 --modality a=" + ws.path("xs.csv") + " --config " + ws.path("cfg.json") +
                      " --out " + ws.path("out2"),
                  ws.path("log1.txt")) == 0);
  CHECK(msc::load_matrix(ws.path("out2") + "/dict.msc").cols() == 5);
}
