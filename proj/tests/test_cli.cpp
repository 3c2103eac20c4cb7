#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <unistd.h>

#include "cli.hpp"
#include "doctest.h"
#include "opfunc/experiment_io.hpp"
#include "opfunc/matrix_io.hpp"

using namespace opfunc;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// A scratch directory removed at the end of each test case.
struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("opfunc_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(dir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::string write(const std::string& name, const std::string& text) const {
    const fs::path p = dir / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string matrix_text(const MatrixXcd& m) {
  std::ostringstream os;
  write_matrix(os, m);
  return os.str();
}

std::string poly_text(const TrigPoly& f) {
  std::ostringstream os;
  write_trig_poly(os, f);
  return os.str();
}

const char* kUnitaryConfig =
    R"({"mode": "unitary", "dims": [2, 3], "p_values": [2, "inf"], "budget": 0, "seeds": [0, 1],
        "norm_mode": "besov"})";

}  // namespace

TEST_CASE("norm of a matrix prints 17 significant digits") {
  Scratch s;
  const auto m = s.write("d.mat", "dim 2\n3 0\n0 4\n");
  const Result r = run({"norm", m, "--p", "2"});
  CHECK(r.code == 0);
  CHECK(r.out == "5.0000000000000000\n");
  CHECK(run({"norm", m, "--p", "inf"}).out == "4.0000000000000000\n");
  CHECK(run({"norm", m, "--p", "0.5"}).code == 3);
  CHECK(run({"norm", m, "--p", "two"}).code == 2);
  CHECK(run({"norm", s.path("missing.mat")}).code == 2);
  CHECK(run({"norm", s.write("x.txt", "hello\n")}).code == 2);
}

TEST_CASE("norm of a polynomial") {
  Scratch s;
  const Result c = run({"norm", s.write("c.poly", "d 2 degree 0\n0 0 -1.5 2\n")});
  CHECK(c.code == 0);
  CHECK(c.out.find("besov_s1 2.5000000000000000\n") != std::string::npos);

  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  TrigPoly f(2);
  for (int j = -5; j <= 5; ++j)
    for (int k = -5; k <= 5; ++k) f.set({j, k, 0}, cd(g(rng), g(rng)));
  const Result r = run({"norm", s.write("r.poly", poly_text(f))});
  CHECK(r.code == 0);
  CHECK(r.out.find("fourier_l1 <= 5 besov PASS") != std::string::npos);
}

TEST_CASE("eval writes the result matrix and cross-checks") {
  Scratch s;
  const auto one = s.write("one.poly", "d 2 degree 0\n0 0 1 0\n");
  const auto a = s.write("a.mat", "dim 2\n0.3 0.1+0.2i\n0.1-0.2i -0.5\n");
  const auto b = s.write("b.mat", "dim 2\n0.7 0\n0 -0.1\n");
  const Result id = run({"eval", one, a, b});
  CHECK(id.code == 0);
  std::istringstream is(id.out);
  CHECK(read_matrix(is).isApprox(MatrixXcd::Identity(2, 2), 1e-14));

  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  TrigPoly f(2);
  for (int j = -3; j <= 3; ++j)
    for (int k = -3; k <= 3; ++k) f.set({j, k, 0}, cd(g(rng), g(rng)));
  const auto fp = s.write("f.poly", poly_text(f));
  for (const char* mode : {"spectral", "fourier"}) {
    const auto out = s.path(std::string("r_") + mode + ".mat");
    const std::string a_before = slurp(a);
    const Result r = run({"eval", "--mode", mode, "--check", fp, a, b, "--out", out});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("residual ", 0) == 0);
    CHECK(r.out.find("PASS") != std::string::npos);
    CHECK(load_matrix(out).rows() == 2);
    CHECK(slurp(a) == a_before);
  }

  const auto f3 = s.write("f3.poly", "d 3 degree 1\n1 0 -1 1 0\n0 1 1 0 0.5\n");
  const Result t = run({"eval", "--mode", "triple", "--check", f3, a, b, a});
  CHECK(t.code == 0);
  CHECK(t.out.find("PASS") != std::string::npos);

  const auto u = s.write("u.mat", "dim 2\n0 1\n1 0\n");
  const auto v = s.write("v.mat", "dim 2\n1 0\n0 0+1i\n");
  const Result un = run({"eval", "--mode", "unitary", "--check", fp, u, v});
  CHECK(un.code == 0);
  CHECK(un.out.find("PASS") != std::string::npos);

  SUBCASE("errors") {
    CHECK(run({"eval", fp, s.write("bad.mat", "dim 2\n1 2\n"), b}).code == 2);
    CHECK(run({"eval", "--mode", "fourier", fp, s.write("big.mat", "dim 2\n4 0\n0 1\n"), b}).code == 3);
    CHECK(run({"eval", fp, s.write("nh.mat", "dim 2\n0 1\n0 0\n"), b}).code == 3);
    CHECK(run({"eval", "--mode", "diagonal", fp, a, b}).code == 2);
    CHECK(run({"eval", fp, a}).code == 2);
    CHECK(run({"eval", fp, a, b, "--out", a}).code == 2);
    CHECK(run({"eval", "--mode", "triple", fp, a, b, a}).code == 2);
  }

  SUBCASE("OPFUNC_TOL overrides the check tolerance") {
    ::setenv("OPFUNC_TOL", "1e-300", 1);
    const Result tight = run({"eval", "--check", fp, a, b});
    ::setenv("OPFUNC_TOL", "abc", 1);
    const Result bad = run({"eval", "--check", fp, a, b});
    ::unsetenv("OPFUNC_TOL");
    CHECK(tight.code == 1);
    CHECK(tight.out.find("FAIL") != std::string::npos);
    CHECK(bad.code == 2);
  }
}

TEST_CASE("search with budget 0 reports the seeded families") {
  Scratch s;
  const auto cfg = s.write("cfg.json", kUnitaryConfig);
  const Result r = run({"search", cfg, "--jobs", "2"});
  REQUIRE(r.code == 0);
  std::istringstream is(r.out);
  std::string line;
  std::getline(is, line);
  CHECK(line == "mode,m,p,norm_mode,best_ratio,f_degree,besov_norm,sup_norm,pert_norm,seed,iters");
  int rows = 0;
  while (std::getline(is, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    REQUIRE(f.size() == 11);
    const int m = std::stoi(f[1]);
    const SchattenExponent p = SchattenExponent::parse(f[2]);
    const auto seed = static_cast<std::uint64_t>(std::stoull(f[9]));
    double best = 0;
    for (FamilyKind k : {FamilyKind::Triangular, FamilyKind::Optimized, FamilyKind::Random})
      best = std::max(best, lipschitz_ratio(seeded_family(m, k, p, NormMode::Besov, seed)));
    CHECK(std::stod(f[4]) == best);
    ++rows;
  }
  CHECK(rows == 8);
}

TEST_CASE("search outputs are byte-identical across runs") {
  Scratch s;
  const std::string cfg = s.write(
      "cfg.json", R"({"mode": "unitary", "dims": [2, 3], "p_values": [2], "budget": 20, "seeds": [4],
                      "norm_mode": "sup"})");
  const std::string before = slurp(cfg);
  const Result a = run({"search", cfg, "--out", s.path("a"), "--jobs", "1"});
  const Result b = run({"search", cfg, "--out", s.path("b"), "--jobs", "2"});
  CHECK(a.code == 0);
  CHECK(b.code == 0);
  CHECK(slurp(s.path("a.csv")) == slurp(s.path("b.csv")));
  CHECK(slurp(s.path("a.json")) == slurp(s.path("b.json")));
  CHECK(slurp(cfg) == before);
  CHECK(a.out.find("cell m=2") != std::string::npos);
}

TEST_CASE("search and sweep config errors exit with 2") {
  Scratch s;
  CHECK(run({"search", s.write("bad.json", R"({"mode": "unitary", "dims": [2]})")}).code == 2);
  CHECK(run({"search", s.write("syntax.json", "{")}).code == 2);
  CHECK(run({"search", s.path("none.json")}).code == 2);
  const auto cfg = s.write("cfg.json", kUnitaryConfig);
  CHECK(run({"search", cfg, "--p", "0.2"}).code == 2);
  CHECK(run({"search", cfg, "--jobs", "0"}).code == 2);
  CHECK(run({"search", cfg, "--mode", "diagonal"}).code == 2);
  CHECK(run({"sweep", cfg}).code == 2);  // two dimensions only
}

TEST_CASE("sweep reports fits and the monitor") {
  Scratch s;
  const auto cfg = s.write(
      "cfg.json", R"({"mode": "unitary", "dims": [2, 3, 4], "p_values": [2, 4], "budget": 0, "seeds": [0],
                      "norm_mode": "besov", "families": ["triangular"]})");
  const Result r = run({"sweep", cfg, "--out", s.path("sw")});
  CHECK(r.code == 0);
  CHECK(r.out.find("fit p=2 slope=") != std::string::npos);
  CHECK(r.out.find("monitor p=2") != std::string::npos);
  const std::string js = slurp(s.path("sw.json"));
  CHECK(js.find("\"fits\"") != std::string::npos);
  CHECK(js.find("\"reference_exponent_sup\"") != std::string::npos);
}

TEST_CASE("witness prints partial sums and verdicts") {
  Scratch s;
  const Result r = run({"witness", "--synthetic", "8", "--p", "4", "--out", s.path("blk")});
  CHECK(r.code == 0);
  CHECK(r.out.find("perturbation sum bounded: ") != std::string::npos);
  CHECK(r.out.find("increment sum \xE2\x89\xA5 8: ") != std::string::npos);
  CHECK(r.out.find("FAIL") == std::string::npos);

  std::vector<std::string> files{"witness", "--p", "4"};
  for (int k = 1; k <= 8; ++k) files.push_back(s.path("blk_" + std::to_string(k) + ".json"));
  CHECK(run(files).code == 0);

  // Out of order: the last block is too large for its position.
  std::vector<std::string> swapped = files;
  std::swap(swapped[3], swapped.back());
  const Result bad = run(swapped);
  CHECK(bad.code == 3);
  CHECK(bad.err.find("block 8") != std::string::npos);

  CHECK(run({"witness", "--synthetic", "4", "--p", "inf"}).code == 3);
  CHECK(run({"witness"}).code == 2);
  CHECK(run({"witness", s.write("junk.json", "{}")}).code == 2);
}

TEST_CASE("kappa") {
  CHECK(run({"kappa", "--mask", R"({"rule": "quadrant"})", "--m", "3"}).out == "kappa 3\n");
  CHECK(run({"kappa", "--mask", R"([[0, 0], [1, 0]])", "--m", "2"}).out.rfind("kappa none", 0) == 0);
  CHECK(run({"kappa", "--mask", R"({"rule": "ring"})", "--m", "2"}).code == 2);
  CHECK(run({"kappa", "--mask", R"({"rule": "full"})"}).code == 2);
}

TEST_CASE("usage errors") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}
