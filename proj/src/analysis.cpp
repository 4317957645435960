#include "analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <optional>
#include <ostream>

#include "errors.hpp"

namespace cetm {

namespace {

constexpr double kInequalityTol = 1e-6;

std::complex<double> aligned(const ScaledComplex& t, std::int64_t emax) {
  if (t.zero()) return {0.0, 0.0};
  const std::int64_t d = std::max<std::int64_t>(t.e - emax, -kAlignLimit);
  return ldexp_c(t.m, static_cast<int>(d));
}

/// Trapezoid over per-node terms carried as mantissa * 2^e; everything is
/// accumulated below the largest exponent so raw tail magnitudes cannot
/// overflow the sum.
ScaledComplex trapezoid(const std::vector<double>& xs,
                        const std::vector<ScaledComplex>& terms) {
  std::int64_t emax = 0;
  bool any = false;
  for (const auto& t : terms) {
    if (t.zero()) continue;
    emax = any ? std::max(emax, t.e) : t.e;
    any = true;
  }
  if (!any || xs.size() < 2) return {};
  std::complex<double> acc{0.0, 0.0};
  for (size_t i = 0; i + 1 < xs.size(); ++i) {
    acc += 0.5 * (aligned(terms[i], emax) + aligned(terms[i + 1], emax)) *
           (xs[i + 1] - xs[i]);
  }
  return normalized(acc, emax);
}

void window_nodes(const std::vector<GridSample>& samples, double lo, double hi,
                  std::vector<double>& xs, std::vector<const GridSample*>& nodes) {
  for (const auto& s : samples) {
    if (s.x < lo || s.x > hi) continue;
    xs.push_back(s.x);
    nodes.push_back(&s);
  }
}

const char* side_name(DetuneSide s) {
  return s == DetuneSide::above ? "above" : "below";
}

void append_g17(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

std::vector<GridSample> analysis_samples(const WaveSolution& sol,
                                         int points_per_segment) {
  const auto base = sample_grid(sol, points_per_segment);
  std::vector<GridSample> out;
  out.reserve(base.size());
  for (const auto& s : base) out.push_back({s.x, s.psi, sol.derivative(s.x)});
  return out;
}

NormalizedWave normalize_energy(std::vector<GridSample> samples,
                                double target_norm, double np_lo,
                                double np_hi) {
  require(std::isfinite(target_norm) && target_norm > 0.0,
          ErrorCode::invalid_argument,
          "normalization target must be a positive energy");
  require(np_lo < np_hi, ErrorCode::invalid_argument,
          "normalization window is empty");
  std::vector<double> xs;
  std::vector<const GridSample*> nodes;
  window_nodes(samples, np_lo, np_hi, xs, nodes);
  require(xs.size() >= 2, ErrorCode::degenerate_input,
          "normalization window holds fewer than two nodes");
  std::vector<ScaledComplex> t2;
  t2.reserve(nodes.size());
  for (const auto* s : nodes)
    t2.push_back(normalized(std::norm(s->psi.m), 2 * s->psi.e));
  const ScaledComplex s2 = trapezoid(xs, t2);
  require(!s2.zero() && s2.finite() && s2.m.real() > 0.0,
          ErrorCode::degenerate_input,
          "zero norm over the normalization window");

  int te = 0;
  const double tm = std::frexp(target_norm, &te);
  int ae = 0;
  double rm = std::frexp(tm / s2.m.real(), &ae);
  std::int64_t re = static_cast<std::int64_t>(te) - s2.e + ae;
  if (re % 2 != 0) {  // even exponent so the square root stays exact in e
    rm *= 2.0;
    re -= 1;
  }
  const ScaledReal factor{std::sqrt(rm), re / 2};

  for (auto& s : samples) {
    s.psi = normalized(s.psi.m * factor.m, s.psi.e + factor.e);
    s.dpsi = normalized(s.dpsi.m * factor.m, s.dpsi.e + factor.e);
  }
  return {std::move(samples), factor, np_lo, np_hi};
}

std::pair<std::vector<GridSample>, std::vector<GridSample>> split_np_dp(
    const std::vector<GridSample>& samples, double x_d, Side divergent_side) {
  std::vector<GridSample> np;
  std::vector<GridSample> dp;
  for (const auto& s : samples) {
    const bool in_dp =
        divergent_side == Side::left ? s.x < x_d : s.x > x_d;
    (in_dp ? dp : np).push_back(s);
  }
  return {std::move(np), std::move(dp)};
}

double dp_weight(double e, double e_n) {
  require(e > 0.0 && e_n > 0.0, ErrorCode::invalid_argument,
          "momentum weights need positive energies");
  return std::abs(e - e_n) / std::max(e, e_n);
}

double mean_momentum_dp_factor(double e, double e_n, double k_d) {
  return dp_weight(e, e_n) * std::abs(k_d);
}

double mean_momentum_np(const NormalizedWave& nw, PcMode mode) {
  std::vector<double> xs;
  std::vector<const GridSample*> nodes;
  window_nodes(nw.samples, nw.np_lo, nw.np_hi, xs, nodes);
  if (xs.size() < 2) return 0.0;
  std::vector<ScaledComplex> terms;
  terms.reserve(nodes.size());
  for (const auto* s : nodes)
    terms.push_back(
        normalized(std::conj(s->psi.m) * s->dpsi.m, s->psi.e + s->dpsi.e));
  const ScaledComplex integral = trapezoid(xs, terms);
  const std::complex<double> z =
      sc_collapse(sc_mul(integral, std::complex<double>(0.0, -1.0)));
  switch (mode) {
    case PcMode::real_part:
      return z.real();
    case PcMode::imag_part:
      return z.imag();
    case PcMode::magnitude:
    default:
      return std::abs(z);
  }
}

namespace {

Seed record_seed(const PotentialPtr& p, double energy, const Seed& base) {
  if (base.mode != Seed::Mode::interior) return base;
  return Seed::interior(base.segment,
                        {tuned_interior_b(p, energy, base.segment), 0.0});
}

/// Trustworthy extent of the reference state: from its peak outward to the
/// amplitude minima of its classically forbidden tails.  A finite-tolerance
/// reference lifts off its own decay floor near the domain edges; beyond the
/// floor it no longer represents the convergent state, and a momentum window
/// reaching past it would read that residual tail instead of the physics.
/// Only forbidden-region samples are floor candidates, so interior nodes of
/// excited states never clip the window.
std::pair<double, double> clean_extent(const std::vector<GridSample>& samples,
                                       const SegmentedPotential& pot,
                                       double energy, double x_peak) {
  size_t ip = 0;
  double nearest = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < samples.size(); ++i) {
    const double d = std::abs(samples[i].x - x_peak);
    if (d < nearest) {
      nearest = d;
      ip = i;
    }
  }
  auto forbidden = [&](double x) {
    return 2.0 * (energy - pot.value(pot.segment_of(x))) < -kDegenerateEps;
  };
  double lo = samples.front().x;
  double min_l = std::numeric_limits<double>::infinity();
  for (size_t i = ip + 1; i-- > 0;) {
    if (!forbidden(samples[i].x)) continue;
    const double v = log2_abs(samples[i].psi);
    if (v < min_l) {
      min_l = v;
      lo = samples[i].x;
    }
  }
  double hi = samples.back().x;
  double min_r = std::numeric_limits<double>::infinity();
  for (size_t i = ip; i < samples.size(); ++i) {
    if (!forbidden(samples[i].x)) continue;
    const double v = log2_abs(samples[i].psi);
    if (v < min_r) {
      min_r = v;
      hi = samples[i].x;
    }
  }
  return {lo, hi};
}

/// Segment whose |k| labels the onset; a degenerate (linear-basis) segment
/// defers to its nearest plane-basis neighbour.
int onset_segment(const SegmentedPotential& pot, double energy, double x_d,
                  int offset) {
  const int n = pot.segments();
  int j = std::clamp(pot.segment_of(x_d) + offset, 1, n);
  if (!is_degenerate(energy, pot.value(j))) return j;
  for (int d = 1; d < n; ++d) {
    if (j - d >= 1 && !is_degenerate(energy, pot.value(j - d))) return j - d;
    if (j + d <= n && !is_degenerate(energy, pot.value(j + d))) return j + d;
  }
  return j;
}

}  // namespace

CollectResult collect_uncertainty_dataset(const PotentialPtr& p,
                                          const EigenResult& reference,
                                          const std::vector<double>& detunings,
                                          DetuneSide side,
                                          const CollectOptions& options) {
  require(p != nullptr, ErrorCode::invalid_argument, "null potential");
  require(reference.wave != nullptr, ErrorCode::invalid_argument,
          "reference result carries no wavefunction");
  for (double d : detunings)
    require(std::isfinite(d) && d > 0.0, ErrorCode::invalid_argument,
            "detunings must be positive");

  const double e_n = reference.energy;
  const WaveSolution& ref_sol = *reference.wave;
  const XdReference xr = make_xd_reference(ref_sol, options.points_per_segment);
  const auto ref_samples = analysis_samples(ref_sol, options.points_per_segment);
  const InteriorStats ref_stats =
      interior_stats(ref_sol, options.points_per_segment);
  const auto [clean_lo, clean_hi] =
      clean_extent(ref_samples, *p, e_n, ref_stats.x_peak);
  const double sgn = side == DetuneSide::above ? 1.0 : -1.0;
  const double guard = 16.0 * options.tol;

  // Sign just off the eigenvalue; a detuning whose sign differs from it has
  // crossed another flip on the way out.
  int s_near = 0;
  try {
    s_near = divergence_sign(p, e_n + sgn * guard, ref_sol.seed());
  } catch (const Error&) {
    s_near = 0;
  }

  const size_t n = detunings.size();
  std::vector<std::optional<UncertaintyRecord>> slots(n);
  std::vector<std::string> slot_warnings(n);

  auto process = [&](size_t idx) {
    const double d = detunings[idx];
    char head[96];
    std::snprintf(head, sizeof head, "skipped delta_E=%.6g (%s): ", d,
                  side_name(side));
    const double e = e_n + sgn * d;
    if (e == e_n) {
      slot_warnings[idx] = std::string(head) + "detuning vanishes at this precision";
      return;
    }
    try {
      if (d > guard && s_near != 0) {
        const int s_e = divergence_sign(p, e, ref_sol.seed());
        if (s_e != 0 && s_e != s_near) {
          slot_warnings[idx] =
              std::string(head) + "detuning spans another eigenvalue";
          return;
        }
      }
      const WaveSolution sol =
          propagate(p, e, record_seed(p, e, ref_sol.seed()));
      // The class itself is not gated on: a detuning can sit below the
      // alpha/beta threshold yet still carry a perfectly detectable onset.
      const DivergenceReport rep =
          classify(sol, options.tail_threshold_exp, options.points_per_segment);
      const double x_d =
          detect_xd(sol, xr, options.tau, options.points_per_segment);
      Side div_side;
      if (rep.sign_left != 0 && rep.sign_right == 0) {
        div_side = Side::left;
      } else if (rep.sign_right != 0 && rep.sign_left == 0) {
        div_side = Side::right;
      } else {
        const InteriorStats stats =
            interior_stats(sol, options.points_per_segment);
        div_side = x_d < stats.x_peak ? Side::left : Side::right;
      }

      // Normal-part window on the reference: everything on the convergent
      // side of the onset, clipped to the reference's own trustworthy extent.
      const double win_lo =
          div_side == Side::left ? std::max(x_d, clean_lo) : clean_lo;
      const double win_hi =
          div_side == Side::left ? clean_hi : std::min(x_d, clean_hi);
      if (!(win_lo < win_hi)) {
        slot_warnings[idx] = std::string(head) + "normal part holds no window";
        return;
      }
      const NormalizedWave nw =
          normalize_energy(ref_samples, std::min(e, e_n), win_lo, win_hi);
      const double pc = mean_momentum_np(nw, options.pc_mode);

      const int seg = onset_segment(*p, e, x_d, options.kd_segment_offset);
      const double kd = std::abs(wavenumber(e, p->value(seg)));

      UncertaintyRecord rec;
      rec.e = e;
      rec.e_n = e_n;
      rec.delta_e = std::abs(e - e_n);
      rec.x_d = x_d;
      rec.delta_x = std::abs(x_d);
      rec.k_d = kd;
      rec.p_d_factor = mean_momentum_dp_factor(e, e_n, kd);
      rec.p_c = pc;
      rec.side = side;
      slots[idx] = rec;
    } catch (const Error& err) {
      slot_warnings[idx] = std::string(head) + err.what();
    }
  };

  const int threads = std::max(1, options.threads);
  if (threads == 1 || n <= 1) {
    for (size_t i = 0; i < n; ++i) process(i);
  } else {
    const size_t chunks = std::min<size_t>(static_cast<size_t>(threads), n);
    std::vector<std::future<void>> work;
    work.reserve(chunks);
    for (size_t c = 0; c < chunks; ++c) {
      work.push_back(std::async(std::launch::async, [&, c] {
        for (size_t i = c; i < n; i += chunks) process(i);
      }));
    }
    for (auto& w : work) w.get();
  }

  CollectResult out;
  for (size_t i = 0; i < n; ++i) {
    if (slots[i])
      out.records.push_back(*slots[i]);
    else
      out.warnings.push_back(std::move(slot_warnings[i]));
  }
  return out;
}

namespace {

double fit_objective(const std::vector<UncertaintyRecord>& records, double a) {
  double sum = 0.0;
  for (const auto& r : records) {
    const double pred =
        std::abs(a * r.p_d_factor + r.p_c) / (2.0 * r.delta_x);
    if (!(pred > 0.0) || !std::isfinite(pred))
      return std::numeric_limits<double>::infinity();
    const double d = std::log(r.delta_e) - std::log(pred);
    sum += d * d;
  }
  return sum;
}

bool fit_feasible(const std::vector<UncertaintyRecord>& records, double a) {
  for (const auto& r : records)
    if (!check_uncertainty_inequality(r, a)) return false;
  return true;
}

template <typename F>
double golden_min(F f, double lo, double hi) {
  constexpr double gr = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - gr * (b - a);
  double d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < 200 && b - a > 1e-14; ++i) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const size_t mid = v.size() / 2;
  return v.size() % 2 != 0 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

}  // namespace

FitResult fit_uncertainty(const std::vector<UncertaintyRecord>& records) {
  require(records.size() >= 3, ErrorCode::insufficient_data,
          "uncertainty fit needs at least three records");
  for (const auto& r : records)
    require(std::isfinite(r.delta_e) && r.delta_e > 0.0 &&
                std::isfinite(r.delta_x) && r.delta_x > 0.0,
            ErrorCode::invalid_argument,
            "fit records need positive delta_E and delta_x");

  struct Branch {
    double cand = 0.0;
    double cost = std::numeric_limits<double>::infinity();
    bool ok = false;
  };
  Branch branch[2];
  const double signs[2] = {1.0, -1.0};
  for (int bi = 0; bi < 2; ++bi) {
    const double sign = signs[bi];
    double t_best = 0.0;
    double c_best = std::numeric_limits<double>::infinity();
    for (double t = -16.0; t <= 16.0 + 1e-9; t += 0.05) {
      const double c = fit_objective(records, sign * std::exp(t));
      if (c < c_best) {
        c_best = c;
        t_best = t;
      }
    }
    if (!std::isfinite(c_best)) continue;
    const double t_opt = golden_min(
        [&](double t) { return fit_objective(records, sign * std::exp(t)); },
        t_best - 0.15, t_best + 0.15);
    branch[bi].cand = sign * std::exp(t_opt);
    branch[bi].cost = fit_objective(records, branch[bi].cand);
    branch[bi].ok = std::isfinite(branch[bi].cost);
  }
  require(branch[0].ok || branch[1].ok, ErrorCode::no_result,
          "no finite fit coefficient found");

  // Branch choice goes by the least-squares objective alone.  The branches
  // differ only through p_c; when p_c sits at noise level they are
  // degenerate to about its relative size, so a switch to the negative sign
  // must beat the positive branch by more than that degeneracy, while a
  // genuinely sign-identified dataset separates the branches at the order
  // of the residuals themselves.
  const int pick =
      branch[1].ok &&
              (!branch[0].ok || branch[1].cost < branch[0].cost * (1.0 - 1e-4))
          ? 1
          : 0;

  // Project the winner onto the set the inequality accepts: predictions
  // shrink with |a| near the optimum, so the feasible region is reached by
  // walking the magnitude down.  If the whole branch resists, the other one
  // gets a turn; failing both, the unconstrained optimum stands.
  double best_a = branch[pick].cand;
  bool settled = false;
  for (int attempt = 0; attempt < 2 && !settled; ++attempt) {
    const int bi = attempt == 0 ? pick : 1 - pick;
    if (!branch[bi].ok) continue;
    const double cand = branch[bi].cand;
    if (fit_feasible(records, cand)) {
      best_a = cand;
      settled = true;
      break;
    }
    const double sign = cand < 0.0 ? -1.0 : 1.0;
    const double t_opt = std::log(std::abs(cand));
    double lo = t_opt - 80.0;
    if (!fit_feasible(records, sign * std::exp(lo))) continue;
    double hi = t_opt;
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (mid <= lo || mid >= hi) break;
      if (fit_feasible(records, sign * std::exp(mid)))
        lo = mid;
      else
        hi = mid;
    }
    best_a = sign * std::exp(lo);
    settled = true;
  }

  FitResult out;
  out.a = best_a;
  out.n_records = static_cast<int>(records.size());
  std::vector<double> logs;
  for (const auto& r : records) {
    const double pred =
        std::abs(best_a * r.p_d_factor + r.p_c) / (2.0 * r.delta_x);
    out.residuals.push_back(std::abs(pred / r.delta_e - 1.0));
    logs.push_back(pred > 0.0
                       ? std::abs(std::log(pred / r.delta_e))
                       : std::numeric_limits<double>::infinity());
  }
  out.median_rel_residual = median_of(out.residuals);
  out.median_log_residual = median_of(std::move(logs));
  return out;
}

bool check_uncertainty_inequality(const UncertaintyRecord& rec, double a) {
  const double p_bar = a * rec.p_d_factor + rec.p_c;
  return rec.delta_e * rec.delta_x >=
         0.5 * std::abs(p_bar) * (1.0 - kInequalityTol);
}

std::string dataset_csv(const std::vector<UncertaintyRecord>& records) {
  std::string out = "E,E_n,delta_E,x_d,delta_x,k_d,p_d_factor,p_c,side\n";
  for (const auto& r : records) {
    append_g17(out, r.e);
    out += ',';
    append_g17(out, r.e_n);
    out += ',';
    append_g17(out, r.delta_e);
    out += ',';
    append_g17(out, r.x_d);
    out += ',';
    append_g17(out, r.delta_x);
    out += ',';
    append_g17(out, r.k_d);
    out += ',';
    append_g17(out, r.p_d_factor);
    out += ',';
    append_g17(out, r.p_c);
    out += ',';
    out += side_name(r.side);
    out += '\n';
  }
  return out;
}

void write_dataset_csv(std::ostream& os,
                       const std::vector<UncertaintyRecord>& records) {
  os << dataset_csv(records);
}

}  // namespace cetm
