#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* env = std::getenv("CETM_CLI");
  REQUIRE_MESSAGE(env != nullptr, "CETM_CLI must point at the built binary");
  return env;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "cetm_cli_tests" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

RunResult run(const std::string& args, const fs::path& dir) {
  const fs::path out = dir / "_stdout.txt";
  const fs::path err = dir / "_stderr.txt";
  const std::string cmd = cli() + " " + args + " > " + out.string() + " 2> " +
                          err.string();
  const int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = rc == -1 ? -1 : (WIFEXITED(rc) ? WEXITSTATUS(rc) : -2);
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

size_t line_count(const std::string& text) {
  size_t n = 0;
  for (char c : text) n += c == '\n';
  return n;
}

const std::string kSmall = "--potential harmonic --xmin -8 --xmax 8 ";

}  // namespace

TEST_CASE("spectrum: header, rows, and verified flags") {
  const auto d = fresh_dir("spectrum_ok");
  const auto r = run("spectrum " + kSmall +
                         "--segments 400 --emin 0 --emax 3 --out " + d.string(),
                     d);
  CHECK(r.exit_code == 0);
  const std::string csv = slurp(d / "spectrum.csv");
  CHECK(csv.rfind("index,energy,bracket_lo,bracket_hi,verified,tail_exp\n",
                  0) == 0);
  CHECK(line_count(csv) == 4);
  CHECK(csv.find("\n0,0.5") != std::string::npos);
  CHECK(csv.find("\n1,1.5") != std::string::npos);
  CHECK(csv.find("\n2,2.5") != std::string::npos);
  for (size_t pos = csv.find('\n'); pos + 1 < csv.size();
       pos = csv.find('\n', pos + 1)) {
    // verified is the fifth field of every data row
    size_t field = 0;
    size_t start = pos + 1;
    for (int i = 0; i < 4; ++i) field = csv.find(',', field ? field + 1 : start);
    CHECK(csv[field + 1] == '1');
  }
}

TEST_CASE("spectrum: empty range exits 3, bad config exits 2") {
  const auto d = fresh_dir("spectrum_err");
  CHECK(run("spectrum --potential well --emin 0 --emax 0.4 --out " +
                d.string(),
            d)
            .exit_code == 3);
  CHECK(run("spectrum " + kSmall + "--segments 0 --out " + d.string(), d)
            .exit_code == 2);
  CHECK(run("spectrum --potential bogus --out " + d.string(), d).exit_code ==
        2);
  CHECK(run("spectrum " + kSmall + "--no-such-flag --out " + d.string(), d)
            .exit_code == 2);
}

// the detuned tail must clear the 64-bit divergence threshold, which needs
// wider forbidden flanks than the small spectrum domain provides
const std::string kWide = "--potential harmonic --xmin -12 --xmax 12 ";

TEST_CASE("wavefunction: files, onset report, and the analytic overlay") {
  const auto d = fresh_dir("wave_ok");
  const auto r = run("wavefunction " + kWide +
                         "--segments 600 --energy 0.45 --out " + d.string(),
                     d);
  CHECK(r.exit_code == 0);

  const std::string csv = slurp(d / "wave.csv");
  CHECK(csv.rfind("x,re_mantissa,im_mantissa,exp2,re_value_clamped\n", 0) ==
        0);
  CHECK(line_count(csv) == 2402);  // 600 segments * 4 points + closing node

  const std::string rep = slurp(d / "report.json");
  CHECK(rep.find("\"class\": \"beta") != std::string::npos);
  CHECK(rep.find("\"sign_left\": ") != std::string::npos);
  CHECK(rep.find("\"x_d\": -") != std::string::npos);
  CHECK(rep.find("\"tail_exp\": ") != std::string::npos);

  const std::string gp = slurp(d / "wave.gp");
  CHECK(gp.find("wave.csv") != std::string::npos);
  CHECK(gp.find("analytic.csv") != std::string::npos);
  CHECK(fs::exists(d / "analytic.csv"));
}

TEST_CASE("wavefunction: the divergence flips sign across the level") {
  const auto d1 = fresh_dir("wave_lo");
  const auto d2 = fresh_dir("wave_hi");
  REQUIRE(run("wavefunction " + kWide +
                  "--segments 600 --energy 0.45 --out " + d1.string(),
              d1)
              .exit_code == 0);
  REQUIRE(run("wavefunction " + kWide +
                  "--segments 600 --energy 0.55 --out " + d2.string(),
              d2)
              .exit_code == 0);
  const auto first_clamped = [](const std::string& csv) {
    const size_t row = csv.find('\n') + 1;
    const size_t end = csv.find('\n', row);
    const std::string line = csv.substr(row, end - row);
    return std::stod(line.substr(line.rfind(',') + 1));
  };
  // right-seeded: x = xmin is the divergent edge of both runs
  const double lo = first_clamped(slurp(d1 / "wave.csv"));
  const double hi = first_clamped(slurp(d2 / "wave.csv"));
  CHECK(lo * hi < 0.0);
}

TEST_CASE("wavefunction: oscillatory tail is a precondition failure") {
  const auto d = fresh_dir("wave_osc");
  CHECK(run("wavefunction --potential well --energy 12 --out " + d.string(), d)
            .exit_code == 4);
  CHECK(run("wavefunction " + kSmall + "--out " + d.string(), d).exit_code ==
        2);  // --energy missing
}

TEST_CASE("uncertainty: dataset, fit, and plot script") {
  const auto d = fresh_dir("unc_ok");
  const auto r = run("uncertainty " + kSmall +
                         "--segments 800 --emin 0 --emax 1 --decades 3..5 "
                         "--out " +
                         d.string(),
                     d);
  CHECK(r.exit_code == 0);
  const std::string ds = slurp(d / "dataset.csv");
  CHECK(ds.rfind("E,E_n,delta_E,", 0) == 0);
  CHECK(line_count(ds) == 4);
  CHECK(ds.find(",above\n") != std::string::npos);

  const std::string fit = slurp(d / "fit.json");
  CHECK(fit.find("\"a\": ") != std::string::npos);
  CHECK(fit.find("\"median_rel_residual\": ") != std::string::npos);
  CHECK(fit.find("\"n_records\": 3") != std::string::npos);

  CHECK(line_count(slurp(d / "fit.csv")) == 4);
  const std::string gp = slurp(d / "uncertainty.gp");
  CHECK(gp.find("fit.csv") != std::string::npos);
  CHECK(gp.find("logscale") != std::string::npos);
}

TEST_CASE("uncertainty: config errors and unsolvable states") {
  const auto d = fresh_dir("unc_err");
  CHECK(run("uncertainty " + kSmall + "--decades nope --out " + d.string(), d)
            .exit_code == 2);
  CHECK(run("uncertainty " + kSmall + "--decades 6..3 --out " + d.string(), d)
            .exit_code == 2);
  CHECK(run("uncertainty " + kSmall +
                "--segments 400 --emin 0 --emax 1 --eigen-index 9 --out " +
                d.string(),
            d)
            .exit_code == 3);
}

TEST_CASE("oracle-check: analytic families pass at their error floor") {
  const auto d = fresh_dir("oracle");
  const auto well =
      run("oracle-check --potential well --emin 0 --emax 10 --check-tol 1e-10 "
          "--out " +
              d.string(),
          d);
  CHECK(well.exit_code == 0);
  const std::string csv = slurp(d / "comparison.csv");
  CHECK(csv.rfind("method,index,cetm,oracle,abs_diff,rel_diff,pass\n", 0) ==
        0);
  CHECK(line_count(csv) == 4);
  CHECK(csv.find("analytic_well") != std::string::npos);

  // resampling shifts the oscillator levels by ~h^2/24; the verdict follows
  // the tolerance
  CHECK(run("oracle-check " + kSmall + "--segments 400 --check-tol 1e-7 "
                "--out " +
                d.string(),
            d)
            .exit_code == 5);
  CHECK(run("oracle-check " + kSmall + "--segments 400 --check-tol 1e-3 "
                "--out " +
                d.string(),
            d)
            .exit_code == 0);
}

TEST_CASE("stability: seed and grid variations agree") {
  const auto d = fresh_dir("stability");
  const auto r = run("stability " + kSmall +
                         "--segments 400 --emin 0 --emax 1 --out " +
                         d.string(),
                     d);
  CHECK(r.exit_code == 0);
  CHECK(r.out.find("stable") != std::string::npos);
  const std::string csv = slurp(d / "stability.csv");
  CHECK(csv.rfind("seed,steps,pps,energy,sign_minus,sign_plus\n", 0) == 0);
  CHECK(line_count(csv) == 13);  // 3 seeds x 2 scan grids x 2 sample grids
}

TEST_CASE("stability: unscaled propagation over a wide domain is unstable") {
  const auto d = fresh_dir("stability_raw");
  const auto r = run(
      "stability --potential harmonic --xmin -30 --xmax 30 --segments 2000 "
      "--emin 0 --emax 6.5 --disable-scaling --out " +
          d.string(),
      d);
  CHECK(r.exit_code == 5);
  CHECK(r.err.find("overflow") != std::string::npos);
}

TEST_CASE("config file supplies defaults, flags override") {
  const auto d = fresh_dir("config");
  {
    std::ofstream cfg(d / "run.conf");
    cfg << "emax = 1\n";
    cfg << "segments = 300\n";
  }
  const std::string base = "spectrum " + kSmall + "--config " +
                           (d / "run.conf").string() + " --out ";
  const auto from_file = run(base + (d / "a").string(), d);
  CHECK(from_file.exit_code == 0);
  CHECK(line_count(slurp(d / "a" / "spectrum.csv")) == 2);

  const auto overridden = run(base + (d / "b").string() + " --emax 2", d);
  CHECK(overridden.exit_code == 0);
  CHECK(line_count(slurp(d / "b" / "spectrum.csv")) == 3);

  CHECK(run("spectrum --config /no/such/file.conf --out " + d.string(), d)
            .exit_code == 2);
}

TEST_CASE("identical configurations produce identical bytes") {
  const auto d1 = fresh_dir("repeat_a");
  const auto d2 = fresh_dir("repeat_b");
  const std::string spectrum_args =
      "spectrum " + kSmall + "--segments 400 --emin 0 --emax 2 --out ";
  REQUIRE(run(spectrum_args + d1.string(), d1).exit_code == 0);
  REQUIRE(run(spectrum_args + d2.string(), d2).exit_code == 0);
  CHECK(slurp(d1 / "spectrum.csv") == slurp(d2 / "spectrum.csv"));

  const std::string unc_args = "uncertainty " + kSmall +
                               "--segments 800 --emin 0 --emax 1 "
                               "--decades 3..5 --out ";
  REQUIRE(run(unc_args + d1.string(), d1).exit_code == 0);
  REQUIRE(run(unc_args + d2.string(), d2).exit_code == 0);
  CHECK(slurp(d1 / "dataset.csv") == slurp(d2 / "dataset.csv"));
  CHECK(slurp(d1 / "fit.json") == slurp(d2 / "fit.json"));
}
