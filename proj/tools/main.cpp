// cetm: command-line front end over the C API.
//
// Commands: spectrum, wavefunction, uncertainty, oracle-check, stability.
// All file outputs are deterministic: fixed column orders, 17-significant-
// digit numerics, LF endings, no timestamps.
//
// Exit codes: 0 success, 2 invalid configuration, 3 empty result,
// 4 precondition failure, 5 verification failure.

#include <algorithm>
#include <climits>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "cetm/cetm.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitEmpty = 3;
constexpr int kExitPrecondition = 4;
constexpr int kExitVerification = 5;

struct PotentialDeleter {
  void operator()(cetm_potential* p) const { cetm_potential_free(p); }
};
struct WaveDeleter {
  void operator()(cetm_wave* w) const { cetm_wave_free(w); }
};
struct SpectrumDeleter {
  void operator()(cetm_spectrum* s) const { cetm_spectrum_free(s); }
};
struct DatasetDeleter {
  void operator()(cetm_dataset* d) const { cetm_dataset_free(d); }
};
using PotentialHandle = std::unique_ptr<cetm_potential, PotentialDeleter>;
using WaveHandle = std::unique_ptr<cetm_wave, WaveDeleter>;
using SpectrumHandle = std::unique_ptr<cetm_spectrum, SpectrumDeleter>;
using DatasetHandle = std::unique_ptr<cetm_dataset, DatasetDeleter>;

struct Config {
  std::string config_path;
  std::string potential = "harmonic";
  std::string potential_file;
  double xmin = std::nan("");
  double xmax = std::nan("");
  int segments = -1;  // -1 = per-family default
  double depth = 10.0;
  double width = 2.0;
  double padding = 8.0;
  double softening = 1.0;
  std::string seed = "right";
  double tol = 1e-12;
  double tau = 10.0;
  std::string out = ".";
  double emin = 0.0;
  double emax = 6.0;
  int steps = 0;  // 0 = 100 per unit energy
  int pps = 4;
  std::int64_t tail_threshold = 64;
  int threads = 1;
  double energy = std::nan("");
  int eigen_index = 0;
  std::string decades = "2..8";
  std::string side = "above";
  std::string pc_mode = "magnitude";
  int kd_offset = 0;
  double check_tol = 1e-6;
  double oracle_step = 1e-3;
  bool with_numerov = false;
  bool disable_scaling = false;
};

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void die(int code, const std::string& msg) {
  std::cerr << "cetm: " << msg << "\n";
  std::exit(code);
}

void check_status(cetm_status st, int exit_code) {
  if (st != CETM_OK) die(exit_code, cetm_last_error());
}

int config_exit_for(cetm_status st) {
  switch (st) {
    case CETM_ERR_INVALID_ARGUMENT:
    case CETM_ERR_RANGE:
    case CETM_ERR_IO:
      return kExitConfig;
    case CETM_ERR_PRECONDITION:
    case CETM_ERR_NOT_DIVERGENT:
      return kExitPrecondition;
    case CETM_ERR_NO_RESULT:
      return kExitEmpty;
    default:
      return kExitVerification;
  }
}

std::string trim(const std::string& s) {
  const auto from = s.find_first_not_of(" \t\r");
  if (from == std::string::npos) return "";
  return s.substr(from, s.find_last_not_of(" \t\r") - from + 1);
}

double cfg_num(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos == v.size()) return d;
  } catch (const std::exception&) {
  }
  die(kExitConfig, "invalid value '" + v + "' for config key '" + key + "'");
}

int cfg_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long long n = std::stoll(v, &pos);
    if (pos == v.size() && n >= INT_MIN && n <= INT_MAX)
      return static_cast<int>(n);
  } catch (const std::exception&) {
  }
  die(kExitConfig, "invalid value '" + v + "' for config key '" + key + "'");
}

bool cfg_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  die(kExitConfig, "invalid value '" + v + "' for config key '" + key + "'");
}

// Flat "key = value" file; keys mirror the long flags of the subcommand.
// Flags given on the command line override the file.
void apply_config(const CLI::App* sub, Config& cfg) {
  if (cfg.config_path.empty()) return;
  std::ifstream in(cfg.config_path);
  if (!in)
    die(kExitConfig, "cannot read config file '" + cfg.config_path + "'");
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line.erase(hash);
    const std::string text = trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos)
      die(kExitConfig, "malformed line " + std::to_string(lineno) + " in '" +
                           cfg.config_path + "': expected key = value");
    const std::string key = trim(text.substr(0, eq));
    const std::string value = trim(text.substr(eq + 1));
    if (key.empty())
      die(kExitConfig, "malformed line " + std::to_string(lineno) + " in '" +
                           cfg.config_path + "': empty key");

    const CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr)
      die(kExitConfig, "config key '" + key + "' is not an option of '" +
                           sub->get_name() + "'");
    if (opt->count() > 0) continue;  // explicit flag wins

    if (key == "potential") cfg.potential = value;
    else if (key == "potential-file") cfg.potential_file = value;
    else if (key == "xmin") cfg.xmin = cfg_num(key, value);
    else if (key == "xmax") cfg.xmax = cfg_num(key, value);
    else if (key == "segments") cfg.segments = cfg_int(key, value);
    else if (key == "depth") cfg.depth = cfg_num(key, value);
    else if (key == "width") cfg.width = cfg_num(key, value);
    else if (key == "padding") cfg.padding = cfg_num(key, value);
    else if (key == "softening") cfg.softening = cfg_num(key, value);
    else if (key == "seed") cfg.seed = value;
    else if (key == "tol") cfg.tol = cfg_num(key, value);
    else if (key == "tau") cfg.tau = cfg_num(key, value);
    else if (key == "out") cfg.out = value;
    else if (key == "emin") cfg.emin = cfg_num(key, value);
    else if (key == "emax") cfg.emax = cfg_num(key, value);
    else if (key == "steps") cfg.steps = cfg_int(key, value);
    else if (key == "pps") cfg.pps = cfg_int(key, value);
    else if (key == "tail-threshold") cfg.tail_threshold = cfg_int(key, value);
    else if (key == "threads") cfg.threads = cfg_int(key, value);
    else if (key == "energy") cfg.energy = cfg_num(key, value);
    else if (key == "eigen-index") cfg.eigen_index = cfg_int(key, value);
    else if (key == "decades") cfg.decades = value;
    else if (key == "side") cfg.side = value;
    else if (key == "pc-mode") cfg.pc_mode = value;
    else if (key == "kd-offset") cfg.kd_offset = cfg_int(key, value);
    else if (key == "check-tol") cfg.check_tol = cfg_num(key, value);
    else if (key == "oracle-step") cfg.oracle_step = cfg_num(key, value);
    else if (key == "with-numerov") cfg.with_numerov = cfg_bool(key, value);
    else if (key == "disable-scaling")
      cfg.disable_scaling = cfg_bool(key, value);
    else
      die(kExitConfig, "config key '" + key + "' cannot be set from a file");
  }
}

void add_shared_options(CLI::App* cmd, Config& cfg) {
  cmd->add_option("--config", cfg.config_path,
                  "Read defaults from a flat key = value file");
  cmd->add_option("--potential", cfg.potential, "Potential family")
      ->check(CLI::IsMember({"harmonic", "well", "hydrogen", "file"}))
      ->capture_default_str();
  cmd->add_option("--potential-file", cfg.potential_file,
                  "Sample file for --potential file");
  cmd->add_option("--xmin", cfg.xmin, "Domain lower edge");
  cmd->add_option("--xmax", cfg.xmax, "Domain upper edge");
  cmd->add_option("--segments", cfg.segments,
                  "Segment count (default per family)");
  cmd->add_option("--depth", cfg.depth, "Well depth")->capture_default_str();
  cmd->add_option("--width", cfg.width, "Well width")->capture_default_str();
  cmd->add_option("--padding", cfg.padding, "Well padding on each side")
      ->capture_default_str();
  cmd->add_option("--softening", cfg.softening, "Soft-core length")
      ->capture_default_str();
  cmd->add_option("--seed", cfg.seed, "left | right | interior:J:B")
      ->capture_default_str();
  cmd->add_option("--tol", cfg.tol, "Bisection tolerance")
      ->capture_default_str();
  cmd->add_option("--tau", cfg.tau, "Onset detection threshold factor")
      ->capture_default_str();
  cmd->add_option("--pps", cfg.pps, "Sample points per segment")
      ->capture_default_str();
  cmd->add_option("--tail-threshold", cfg.tail_threshold,
                  "Divergence threshold exponent")
      ->capture_default_str();
  cmd->add_option("--threads", cfg.threads, "Worker threads")
      ->capture_default_str();
  cmd->add_option("--out", cfg.out, "Output directory")->capture_default_str();
}

void add_range_options(CLI::App* cmd, Config& cfg) {
  cmd->add_option("--emin", cfg.emin, "Scan range lower edge")
      ->capture_default_str();
  cmd->add_option("--emax", cfg.emax, "Scan range upper edge")
      ->capture_default_str();
  cmd->add_option("--steps", cfg.steps,
                  "Scan grid intervals (0 = 100 per unit energy)");
}

PotentialHandle build_potential(const Config& cfg) {
  if (cfg.segments != -1 && cfg.segments < 1)
    die(kExitConfig, "segment count must be positive");
  const auto pick = [&](int fallback) {
    return cfg.segments == -1 ? fallback : cfg.segments;
  };
  cetm_potential* raw = nullptr;
  cetm_status st = CETM_ERR_INVALID_ARGUMENT;
  if (cfg.potential == "harmonic") {
    const double lo = std::isnan(cfg.xmin) ? -10.0 : cfg.xmin;
    const double hi = std::isnan(cfg.xmax) ? 10.0 : cfg.xmax;
    st = cetm_potential_harmonic(lo, hi, pick(10000), &raw);
  } else if (cfg.potential == "well") {
    st = cetm_potential_finite_well(cfg.depth, cfg.width, cfg.padding, pick(3),
                                    &raw);
  } else if (cfg.potential == "hydrogen") {
    const double lo = std::isnan(cfg.xmin) ? -20.0 : cfg.xmin;
    const double hi = std::isnan(cfg.xmax) ? 20.0 : cfg.xmax;
    st = cetm_potential_hydrogen(cfg.softening, lo, hi, pick(4000), &raw);
  } else if (cfg.potential == "file") {
    if (cfg.potential_file.empty())
      die(kExitConfig, "--potential file requires --potential-file");
    st = cetm_potential_load(cfg.potential_file.c_str(), &raw);
  } else {
    die(kExitConfig, "unknown potential family: " + cfg.potential);
  }
  check_status(st, kExitConfig);
  return PotentialHandle(raw);
}

cetm_seed parse_seed(const std::string& text, const cetm_potential* p) {
  cetm_seed seed;
  if (text == "left") {
    cetm_seed_left(&seed);
    return seed;
  }
  if (text == "right") {
    cetm_seed_right(&seed);
    return seed;
  }
  if (text.rfind("interior:", 0) == 0) {
    const std::string rest = text.substr(9);
    const size_t colon = rest.find(':');
    try {
      const int j = std::stoi(rest.substr(0, colon));
      const double b =
          colon == std::string::npos ? 1.0 : std::stod(rest.substr(colon + 1));
      if (j < 1 || j > cetm_potential_segments(p))
        die(kExitConfig, "interior seed segment out of range");
      cetm_seed_interior(j, b, 0.0, &seed);
      return seed;
    } catch (const std::exception&) {
      die(kExitConfig, "malformed interior seed: " + text);
    }
  }
  die(kExitConfig, "unknown seed mode: " + text);
}

cetm_solver_options solver_options(const Config& cfg) {
  cetm_solver_options o;
  cetm_solver_options_init(&o);
  o.tol = cfg.tol;
  o.tail_threshold_exp = cfg.tail_threshold;
  o.points_per_segment = cfg.pps;
  o.threads = cfg.threads;
  return o;
}

int auto_steps(const Config& cfg) {
  if (cfg.steps > 0) return cfg.steps;
  const double span = cfg.emax - cfg.emin;
  return std::max(1, static_cast<int>(std::lround(100.0 * span)));
}

std::filesystem::path out_path(const Config& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out);
  return std::filesystem::path(cfg.out) / name;
}

std::ofstream open_out(const Config& cfg, const std::string& name) {
  const auto path = out_path(cfg, name);
  std::ofstream os(path, std::ios::binary);
  if (!os) die(kExitConfig, "cannot open " + path.string());
  return os;
}

double clamped_re(const cetm_wave_sample& s, double limit_log2) {
  const double mag_log2 =
      s.re_m == 0.0 ? -std::numeric_limits<double>::infinity()
                    : std::log2(std::abs(s.re_m)) + static_cast<double>(s.exp2);
  const double limit = std::exp2(std::min(limit_log2, 1000.0));
  if (mag_log2 > limit_log2) return s.re_m < 0.0 ? -limit : limit;
  const int e = static_cast<int>(
      std::clamp<std::int64_t>(s.exp2, -2000, 2000));
  return std::ldexp(s.re_m, e);
}

const char* class_name(int cls) {
  switch (cls) {
    case CETM_CLASS_ALPHA: return "alpha";
    case CETM_CLASS_BETA_PLUS: return "beta_plus";
    case CETM_CLASS_BETA_MINUS: return "beta_minus";
    default: return "convergent";
  }
}

// ---- spectrum ----

int cmd_spectrum(const Config& cfg) {
  PotentialHandle pot = build_potential(cfg);
  const cetm_seed seed = parse_seed(cfg.seed, pot.get());
  const cetm_solver_options opts = solver_options(cfg);

  cetm_spectrum* raw = nullptr;
  const cetm_status st =
      cetm_solve_spectrum(pot.get(), cfg.emin, cfg.emax, auto_steps(cfg), &seed,
                          &opts, &raw);
  if (st != CETM_OK) die(config_exit_for(st), cetm_last_error());
  SpectrumHandle sp(raw);

  const size_t n = cetm_spectrum_size(sp.get());
  if (n == 0) die(kExitEmpty, "no eigenvalues in the requested range");

  auto os = open_out(cfg, "spectrum.csv");
  os << "index,energy,bracket_lo,bracket_hi,verified,tail_exp\n";
  for (size_t i = 0; i < n; ++i) {
    cetm_eigen e;
    check_status(cetm_spectrum_get(sp.get(), i, &e), kExitVerification);
    os << i << ',' << g17(e.energy) << ',' << g17(e.bracket_lo) << ','
       << g17(e.bracket_hi) << ',' << e.verified << ',' << e.tail_exponent
       << '\n';
  }
  std::cout << "wrote spectrum.csv (" << n << " eigenvalues)\n";
  return kExitOk;
}

// ---- wavefunction ----

int cmd_wavefunction(const Config& cfg) {
  if (std::isnan(cfg.energy)) die(kExitConfig, "--energy is required");
  PotentialHandle pot = build_potential(cfg);
  const cetm_seed seed = parse_seed(cfg.seed, pot.get());

  cetm_wave* wraw = nullptr;
  const cetm_status st =
      cetm_propagate(pot.get(), cfg.energy, &seed, 0, &wraw);
  if (st != CETM_OK) die(config_exit_for(st), cetm_last_error());
  WaveHandle wave(wraw);

  size_t count = 0;
  check_status(cetm_wave_samples(wave.get(), cfg.pps, nullptr, 0, &count),
               kExitVerification);
  std::vector<cetm_wave_sample> samples(count);
  check_status(
      cetm_wave_samples(wave.get(), cfg.pps, samples.data(), count, &count),
      kExitVerification);

  cetm_interior_stats stats;
  check_status(cetm_wave_interior_stats(wave.get(), cfg.pps, &stats),
               kExitVerification);
  const double limit_log2 = stats.log2_max + std::log2(10.0);

  auto os = open_out(cfg, "wave.csv");
  os << "x,re_mantissa,im_mantissa,exp2,re_value_clamped\n";
  for (const auto& s : samples) {
    os << g17(s.x) << ',' << g17(s.re_m) << ',' << g17(s.im_m) << ',' << s.exp2
       << ',' << g17(clamped_re(s, limit_log2)) << '\n';
  }

  cetm_divergence_report rep;
  check_status(
      cetm_wave_classify(wave.get(), cfg.tail_threshold, cfg.pps, &rep),
      kExitVerification);

  // Onset position needs the nearest converged state as a reference.
  bool have_xd = false;
  double x_d = 0.0;
  if (rep.cls != CETM_CLASS_CONVERGENT) {
    const cetm_solver_options opts = solver_options(cfg);
    cetm_spectrum* nraw = nullptr;
    if (cetm_solve_nearest(pot.get(), cfg.energy, &seed, &opts, &nraw) ==
        CETM_OK) {
      SpectrumHandle nearest(nraw);
      cetm_wave* rraw = nullptr;
      if (cetm_spectrum_wave(nearest.get(), 0, &rraw) == CETM_OK) {
        WaveHandle ref(rraw);
        if (cetm_wave_detect_xd(wave.get(), ref.get(), cfg.tau, cfg.pps,
                                &x_d) == CETM_OK) {
          have_xd = true;
        } else {
          std::cerr << "cetm: onset not located: " << cetm_last_error()
                    << "\n";
        }
      }
    } else {
      std::cerr << "cetm: no converged reference: " << cetm_last_error()
                << "\n";
    }
  }

  {
    auto js = open_out(cfg, "report.json");
    js << "{\n";
    js << "  \"class\": \"" << class_name(rep.cls) << "\",\n";
    js << "  \"sign_left\": " << rep.sign_left << ",\n";
    js << "  \"sign_right\": " << rep.sign_right << ",\n";
    if (have_xd) js << "  \"x_d\": " << g17(x_d) << ",\n";
    js << "  \"tail_exp\": " << rep.tail_exponent << "\n";
    js << "}\n";
  }

  const bool overlay = cfg.potential == "harmonic";
  if (overlay) {
    // Scale the closed-form ground state to the propagated amplitude at the
    // interior peak so the two curves share a y-axis.
    size_t ip = 0;
    for (size_t i = 1; i < samples.size(); ++i) {
      if (std::abs(samples[i].x - stats.x_peak) <
          std::abs(samples[ip].x - stats.x_peak))
        ip = i;
    }
    double ref0 = 0.0;
    check_status(cetm_oracle_harmonic_psi(0, samples[ip].x, &ref0),
                 kExitVerification);
    const double peak_value = clamped_re(samples[ip], limit_log2);
    const double scale = ref0 != 0.0 ? peak_value / ref0 : 1.0;
    auto as = open_out(cfg, "analytic.csv");
    as << "x,psi\n";
    for (const auto& s : samples) {
      double v = 0.0;
      check_status(cetm_oracle_harmonic_psi(0, s.x, &v), kExitVerification);
      as << g17(s.x) << ',' << g17(scale * v) << '\n';
    }
  }

  {
    auto gp = open_out(cfg, "wave.gp");
    gp << "set datafile separator \",\"\n";
    gp << "set xlabel \"x\"\n";
    gp << "set ylabel \"Re(psi), clamped\"\n";
    gp << "set key left top\n";
    if (overlay) {
      gp << "plot \"wave.csv\" using 1:5 with lines title \"cetm\", \\\n";
      gp << "     \"analytic.csv\" using 1:2 with lines title "
            "\"ground state\"\n";
    } else {
      gp << "plot \"wave.csv\" using 1:5 with lines title \"cetm\"\n";
    }
  }

  std::cout << "wrote wave.csv, report.json, wave.gp"
            << (overlay ? ", analytic.csv" : "") << "\n";
  return kExitOk;
}

// ---- uncertainty ----

std::vector<double> parse_decades(const std::string& text) {
  const size_t dots = text.find("..");
  if (dots == std::string::npos) return {};
  try {
    const int lo = std::stoi(text.substr(0, dots));
    const int hi = std::stoi(text.substr(dots + 2));
    if (lo < 0 || hi < lo) return {};
    std::vector<double> out;
    for (int d = lo; d <= hi; ++d) out.push_back(std::pow(10.0, -d));
    return out;
  } catch (const std::exception&) {
    return {};
  }
}

int cmd_uncertainty(const Config& cfg) {
  const std::vector<double> detunings = parse_decades(cfg.decades);
  if (detunings.empty())
    die(kExitConfig, "malformed --decades (expected LO..HI): " + cfg.decades);
  if (cfg.side != "above" && cfg.side != "below" && cfg.side != "both")
    die(kExitConfig, "unknown --side: " + cfg.side);

  PotentialHandle pot = build_potential(cfg);
  const cetm_seed seed = parse_seed(cfg.seed, pot.get());
  const cetm_solver_options opts = solver_options(cfg);

  cetm_spectrum* sraw = nullptr;
  const cetm_status sst =
      cetm_solve_spectrum(pot.get(), cfg.emin, cfg.emax, auto_steps(cfg), &seed,
                          &opts, &sraw);
  if (sst != CETM_OK) die(config_exit_for(sst), cetm_last_error());
  SpectrumHandle sp(sraw);
  if (cfg.eigen_index < 0 ||
      static_cast<size_t>(cfg.eigen_index) >= cetm_spectrum_size(sp.get()))
    die(kExitEmpty, "eigenstate index " + std::to_string(cfg.eigen_index) +
                        " not found in the scanned range");

  cetm_collect_options copts;
  cetm_collect_options_init(&copts);
  copts.tau = cfg.tau;
  copts.points_per_segment = cfg.pps;
  copts.tail_threshold_exp = cfg.tail_threshold;
  copts.kd_segment_offset = cfg.kd_offset;
  copts.tol = cfg.tol;
  copts.threads = cfg.threads;
  if (cfg.pc_mode == "magnitude")
    copts.pc_mode = CETM_PC_MAGNITUDE;
  else if (cfg.pc_mode == "real")
    copts.pc_mode = CETM_PC_REAL;
  else if (cfg.pc_mode == "imag")
    copts.pc_mode = CETM_PC_IMAG;
  else
    die(kExitConfig, "unknown --pc-mode: " + cfg.pc_mode);

  cetm_dataset* draw = nullptr;
  check_status(cetm_dataset_new(&draw), kExitVerification);
  DatasetHandle data(draw);

  const auto collect = [&](int side) {
    const cetm_status st = cetm_dataset_collect(
        data.get(), pot.get(), sp.get(),
        static_cast<size_t>(cfg.eigen_index), detunings.data(),
        detunings.size(), side, &copts);
    if (st != CETM_OK) die(config_exit_for(st), cetm_last_error());
  };
  if (cfg.side == "above" || cfg.side == "both") collect(CETM_SIDE_ABOVE);
  if (cfg.side == "below" || cfg.side == "both") collect(CETM_SIDE_BELOW);

  for (size_t i = 0; i < cetm_dataset_warning_count(data.get()); ++i)
    std::cerr << "cetm: " << cetm_dataset_warning(data.get(), i) << "\n";

  const size_t n = cetm_dataset_size(data.get());
  if (n == 0) die(kExitEmpty, "no usable records collected");

  {
    size_t len = 0;
    check_status(cetm_dataset_csv(data.get(), nullptr, 0, &len),
                 kExitVerification);
    std::string csv(len + 1, '\0');
    check_status(cetm_dataset_csv(data.get(), csv.data(), csv.size(), &len),
                 kExitVerification);
    csv.resize(len);
    auto os = open_out(cfg, "dataset.csv");
    os << csv;
  }

  cetm_fit fit;
  const cetm_status fst = cetm_fit_uncertainty(data.get(), &fit);
  if (fst != CETM_OK) die(config_exit_for(fst), cetm_last_error());

  {
    auto js = open_out(cfg, "fit.json");
    js << "{\n";
    js << "  \"a\": " << g17(fit.a) << ",\n";
    js << "  \"median_rel_residual\": " << g17(fit.median_rel_residual)
       << ",\n";
    js << "  \"n_records\": " << fit.n_records << "\n";
    js << "}\n";
  }

  {
    auto fs = open_out(cfg, "fit.csv");
    fs << "delta_e,prediction\n";
    for (size_t i = 0; i < n; ++i) {
      cetm_record r;
      check_status(cetm_dataset_get(data.get(), i, &r), kExitVerification);
      const double pred =
          std::abs(fit.a * r.p_d_factor + r.p_c) / (2.0 * r.delta_x);
      fs << g17(r.delta_e) << ',' << g17(pred) << '\n';
    }
  }

  {
    auto gp = open_out(cfg, "uncertainty.gp");
    gp << "set datafile separator \",\"\n";
    gp << "set logscale xy\n";
    gp << "set xlabel \"|delta E|\"\n";
    gp << "set ylabel \"|a p_d + p_c| / (2 |x_d|)\"\n";
    gp << "set key left top\n";
    gp << "plot \"fit.csv\" using 1:2 with points pt 7 title \"records\", \\\n";
    gp << "     x with lines dt 2 title \"identity\"\n";
  }

  std::cout << "wrote dataset.csv, fit.json, fit.csv, uncertainty.gp ("
            << n << " records, a = " << g17(fit.a) << ")\n";
  return kExitOk;
}

// ---- oracle-check ----

int cmd_oracle_check(const Config& cfg) {
  PotentialHandle pot = build_potential(cfg);
  const cetm_seed seed = parse_seed(cfg.seed, pot.get());
  const cetm_solver_options opts = solver_options(cfg);

  cetm_spectrum* sraw = nullptr;
  const cetm_status sst =
      cetm_solve_spectrum(pot.get(), cfg.emin, cfg.emax, auto_steps(cfg), &seed,
                          &opts, &sraw);
  if (sst != CETM_OK) die(config_exit_for(sst), cetm_last_error());
  SpectrumHandle sp(sraw);
  const size_t n = cetm_spectrum_size(sp.get());
  if (n == 0) die(kExitEmpty, "no eigenvalues in the requested range");

  std::vector<cetm_eigen> eigen(n);
  for (size_t i = 0; i < n; ++i)
    check_status(cetm_spectrum_get(sp.get(), i, &eigen[i]),
                 kExitVerification);

  struct Row {
    std::string method;
    size_t index;
    cetm_comparison cmp;
  };
  std::vector<Row> rows;

  const auto add_row = [&](const std::string& method, size_t index,
                           const cetm_oracle_result& oracle) {
    cetm_comparison cmp;
    check_status(cetm_oracle_compare(eigen[index].energy, &oracle,
                                     cfg.check_tol, &cmp),
                 kExitVerification);
    rows.push_back({method, index, cmp});
  };

  if (cfg.potential == "harmonic") {
    for (size_t i = 0; i < n; ++i) {
      cetm_oracle_result r{};
      check_status(
          cetm_oracle_harmonic_energy(static_cast<int>(i), &r.eigenvalue),
          kExitVerification);
      r.method = CETM_ORACLE_ANALYTIC_HARMONIC;
      add_row("analytic_harmonic", i, r);
    }
  } else if (cfg.potential == "well") {
    size_t count = 0;
    check_status(
        cetm_oracle_finite_well(cfg.depth, cfg.width, nullptr, 0, &count),
        kExitVerification);
    std::vector<double> roots(count);
    check_status(cetm_oracle_finite_well(cfg.depth, cfg.width, roots.data(),
                                         count, &count),
                 kExitVerification);
    for (size_t i = 0; i < n && i < roots.size(); ++i) {
      cetm_oracle_result r{};
      r.eigenvalue = roots[i];
      r.method = CETM_ORACLE_ANALYTIC_WELL;
      add_row("analytic_well", i, r);
    }
  }

  // Closed-form families are checked against their closed forms; the Numerov
  // integrator covers the rest (its own grid error would dominate a
  // tight-tolerance analytic check).
  const bool run_numerov = cfg.with_numerov || rows.empty();
  for (size_t i = 0; run_numerov && i < n; ++i) {
    double delta = 0.05;
    if (i > 0)
      delta = std::min(delta, 0.45 * (eigen[i].energy - eigen[i - 1].energy));
    if (i + 1 < n)
      delta = std::min(delta, 0.45 * (eigen[i + 1].energy - eigen[i].energy));
    delta = std::max(delta, 64.0 * cfg.tol);
    cetm_oracle_result r{};
    const cetm_status st =
        cetm_oracle_numerov(pot.get(), eigen[i].energy - delta,
                            eigen[i].energy + delta, cfg.oracle_step,
                            std::min(cfg.tol, 1e-10), &r);
    if (st != CETM_OK) {
      std::cerr << "cetm: numerov skipped for level " << i << ": "
                << cetm_last_error() << "\n";
      continue;
    }
    add_row("numerov", i, r);
  }

  bool all_pass = true;
  auto os = open_out(cfg, "comparison.csv");
  os << "method,index,cetm,oracle,abs_diff,rel_diff,pass\n";
  for (const auto& row : rows) {
    os << row.method << ',' << row.index << ',' << g17(row.cmp.cetm) << ','
       << g17(row.cmp.oracle) << ',' << g17(row.cmp.abs_diff) << ','
       << g17(row.cmp.rel_diff) << ',' << row.cmp.pass << '\n';
    all_pass = all_pass && row.cmp.pass != 0;
  }

  std::cout << "wrote comparison.csv (" << rows.size() << " rows, "
            << (all_pass ? "all within" : "mismatch beyond") << " tol "
            << g17(cfg.check_tol) << ")\n";
  return all_pass ? kExitOk : kExitVerification;
}

// ---- stability ----

int cmd_stability(const Config& cfg) {
  PotentialHandle pot = build_potential(cfg);

  // Seed set: both boundary modes plus an interior seed at the potential
  // minimum.
  int min_segment = 1;
  {
    double best = std::numeric_limits<double>::infinity();
    const int n = cetm_potential_segments(pot.get());
    for (int j = 1; j <= n; ++j) {
      double v = 0.0;
      check_status(cetm_potential_segment_value(pot.get(), j, &v),
                   kExitConfig);
      if (v < best) {
        best = v;
        min_segment = j;
      }
    }
  }
  cetm_seed seeds[3];
  cetm_seed_left(&seeds[0]);
  cetm_seed_right(&seeds[1]);
  cetm_seed_interior(min_segment, 1.0, 0.0, &seeds[2]);
  const char* seed_names[3] = {"left", "right", "interior"};

  if (cfg.disable_scaling) {
    // Pre-flight: propagate each seed once without exponent scaling;
    // overflow counts as instability of the unscaled pipeline.
    const double probe = 0.5 * (cfg.emin + cfg.emax);
    for (int si = 0; si < 3; ++si) {
      cetm_wave* wraw = nullptr;
      const cetm_status st =
          cetm_propagate(pot.get(), probe, &seeds[si], 1, &wraw);
      if (st != CETM_OK) {
        std::cerr << "cetm: unscaled propagation unstable (" << seed_names[si]
                  << " seed): " << cetm_last_error() << "\n";
        return kExitVerification;
      }
      cetm_wave_free(wraw);
    }
  }

  const int base_steps = auto_steps(cfg);
  const int step_grid[2] = {base_steps, 2 * base_steps};
  const int pps_grid[2] = {cfg.pps, 2 * cfg.pps};

  struct Row {
    const char* seed;
    int steps;
    int pps;
    double energy;
    int sign_minus;
    int sign_plus;
  };
  std::vector<Row> rows;

  for (int si = 0; si < 3; ++si) {
    for (const int steps : step_grid) {
      for (const int pps : pps_grid) {
        cetm_solver_options opts = solver_options(cfg);
        opts.points_per_segment = pps;
        cetm_spectrum* sraw = nullptr;
        const cetm_status st =
            cetm_solve_spectrum(pot.get(), cfg.emin, cfg.emax, steps,
                                &seeds[si], &opts, &sraw);
        if (st != CETM_OK) {
          std::cerr << "cetm: config " << seed_names[si] << "/" << steps << "/"
                    << pps << " failed: " << cetm_last_error() << "\n";
          return kExitVerification;
        }
        SpectrumHandle sp(sraw);
        if (cfg.eigen_index < 0 ||
            static_cast<size_t>(cfg.eigen_index) >=
                cetm_spectrum_size(sp.get())) {
          std::cerr << "cetm: config " << seed_names[si] << "/" << steps << "/"
                    << pps << " found no eigenstate " << cfg.eigen_index
                    << "\n";
          return kExitVerification;
        }
        cetm_eigen e;
        check_status(cetm_spectrum_get(sp.get(),
                                       static_cast<size_t>(cfg.eigen_index),
                                       &e),
                     kExitVerification);
        int s_minus = 0;
        int s_plus = 0;
        check_status(cetm_divergence_sign(pot.get(), e.energy - 1e-4,
                                          &seeds[si], &s_minus),
                     kExitVerification);
        check_status(cetm_divergence_sign(pot.get(), e.energy + 1e-4,
                                          &seeds[si], &s_plus),
                     kExitVerification);
        rows.push_back(
            {seed_names[si], steps, pps, e.energy, s_minus, s_plus});
      }
    }
  }

  double lo = rows.front().energy;
  double hi = lo;
  bool signs_consistent = true;
  for (const auto& r : rows) {
    lo = std::min(lo, r.energy);
    hi = std::max(hi, r.energy);
    signs_consistent = signs_consistent &&
                       r.sign_minus == rows.front().sign_minus &&
                       r.sign_plus == rows.front().sign_plus &&
                       r.sign_minus == -r.sign_plus && r.sign_minus != 0;
  }
  const double spread = (hi - lo) / std::max(std::abs(lo), std::abs(hi));

  auto os = open_out(cfg, "stability.csv");
  os << "seed,steps,pps,energy,sign_minus,sign_plus\n";
  for (const auto& r : rows) {
    os << r.seed << ',' << r.steps << ',' << r.pps << ',' << g17(r.energy)
       << ',' << r.sign_minus << ',' << r.sign_plus << '\n';
  }

  const bool pass = spread <= 1e-10 && signs_consistent;
  std::cout << "configs=" << rows.size() << " max_rel_spread=" << g17(spread)
            << " signs_consistent=" << (signs_consistent ? "yes" : "no")
            << " -> " << (pass ? "stable" : "UNSTABLE") << "\n";
  return pass ? kExitOk : kExitVerification;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Segmented-potential eigensolver based on divergence "
               "bracketing of continuously propagated waves"};
  app.set_version_flag("--version", cetm_version());
  app.require_subcommand(1);

  Config cfg;

  CLI::App* sp = app.add_subcommand("spectrum", "Scan and bisect eigenvalues");
  add_shared_options(sp, cfg);
  add_range_options(sp, cfg);

  CLI::App* wf =
      app.add_subcommand("wavefunction", "Propagate at a fixed energy");
  add_shared_options(wf, cfg);
  wf->add_option("--energy", cfg.energy, "Propagation energy");

  CLI::App* un = app.add_subcommand(
      "uncertainty", "Collect the detuning dataset and fit the relation");
  add_shared_options(un, cfg);
  add_range_options(un, cfg);
  un->add_option("--eigen-index", cfg.eigen_index, "Reference eigenstate")
      ->capture_default_str();
  un->add_option("--decades", cfg.decades, "Detuning decades LO..HI")
      ->capture_default_str();
  un->add_option("--side", cfg.side, "above | below | both")
      ->capture_default_str();
  un->add_option("--pc-mode", cfg.pc_mode,
                 "Normal-part momentum readout: magnitude | real | imag")
      ->capture_default_str();
  un->add_option("--kd-offset", cfg.kd_offset,
                 "Onset segment shift for k_d sensitivity")
      ->capture_default_str();

  CLI::App* oc = app.add_subcommand(
      "oracle-check", "Cross-check eigenvalues against independent solvers");
  add_shared_options(oc, cfg);
  add_range_options(oc, cfg);
  oc->add_option("--check-tol", cfg.check_tol, "Comparison tolerance")
      ->capture_default_str();
  oc->add_option("--oracle-step", cfg.oracle_step, "Numerov grid step")
      ->capture_default_str();
  oc->add_flag("--with-numerov", cfg.with_numerov,
               "Run the Numerov check even when a closed form exists");

  CLI::App* st = app.add_subcommand(
      "stability", "Re-solve one eigenvalue across seeds and grids");
  add_shared_options(st, cfg);
  add_range_options(st, cfg);
  st->add_option("--eigen-index", cfg.eigen_index, "Eigenstate to track")
      ->capture_default_str();
  st->add_flag("--disable-scaling", cfg.disable_scaling,
               "Fold exponents into raw coefficients (overflow check)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "cetm: " << e.what() << "\n";
    return kExitConfig;
  }

  try {
    if (sp->parsed()) return apply_config(sp, cfg), cmd_spectrum(cfg);
    if (wf->parsed()) return apply_config(wf, cfg), cmd_wavefunction(cfg);
    if (un->parsed()) return apply_config(un, cfg), cmd_uncertainty(cfg);
    if (oc->parsed()) return apply_config(oc, cfg), cmd_oracle_check(cfg);
    if (st->parsed()) return apply_config(st, cfg), cmd_stability(cfg);
  } catch (const std::exception& e) {
    die(kExitVerification, e.what());
  }
  return kExitConfig;
}
