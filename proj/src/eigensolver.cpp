#include "eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "errors.hpp"

namespace cetm {

namespace {

int safe_sign(const PotentialPtr& p, double energy, const Seed& seed) {
  try {
    return divergence_sign(p, energy, seed);
  } catch (const Error&) {
    return kInvalidSign;
  }
}

Seed solution_seed(const PotentialPtr& p, double energy, const Seed& seed) {
  if (seed.mode != Seed::Mode::interior) return seed;
  return Seed::interior(seed.segment,
                        {tuned_interior_b(p, energy, seed.segment), 0.0});
}

}  // namespace

SpectrumScan scan(PotentialPtr p, double e_min, double e_max, int steps,
                  const Seed& seed, const SolverOptions& options) {
  require(p != nullptr, ErrorCode::invalid_argument, "null potential");
  require(std::isfinite(e_min) && std::isfinite(e_max) && e_min < e_max,
          ErrorCode::invalid_argument, "scan needs e_min < e_max");
  require(steps >= 2, ErrorCode::invalid_argument, "scan needs steps >= 2");

  SpectrumScan out;
  out.grid.resize(static_cast<size_t>(steps) + 1);
  out.signs.assign(out.grid.size(), kInvalidSign);
  for (int i = 0; i <= steps; ++i)
    out.grid[static_cast<size_t>(i)] =
        e_min + (e_max - e_min) * (static_cast<double>(i) / steps);
  out.grid.back() = e_max;

  const auto fill = [&](size_t lo, size_t hi) {
    for (size_t i = lo; i < hi; ++i)
      out.signs[i] = safe_sign(p, out.grid[i], seed);
  };
  const int workers = std::max(1, options.threads);
  if (workers == 1) {
    fill(0, out.grid.size());
  } else {
    std::vector<std::future<void>> parts;
    const size_t chunk = (out.grid.size() + workers - 1) / workers;
    for (size_t lo = 0; lo < out.grid.size(); lo += chunk)
      parts.push_back(std::async(std::launch::async, fill, lo,
                                 std::min(lo + chunk, out.grid.size())));
    for (auto& f : parts) f.get();
  }

  for (size_t i = 0; i < out.grid.size(); ++i) {
    if (out.signs[i] == 0)
      out.brackets.push_back({out.grid[i], out.grid[i], 0, 0});
    if (i + 1 < out.grid.size()) {
      const int a = out.signs[i], b = out.signs[i + 1];
      if ((a == 1 || a == -1) && (b == 1 || b == -1) && a != b)
        out.brackets.push_back({out.grid[i], out.grid[i + 1], a, b});
    }
  }
  return out;
}

EigenResult bisect(PotentialPtr p, const EnergyBracket& bracket,
                   const Seed& seed, const SolverOptions& options) {
  require(p != nullptr, ErrorCode::invalid_argument, "null potential");
  require(options.tol > 0.0, ErrorCode::invalid_argument,
          "tolerance must be positive");
  double lo = bracket.lo, hi = bracket.hi;
  require(std::isfinite(lo) && std::isfinite(hi) && lo <= hi,
          ErrorCode::invalid_argument, "malformed bracket");

  EigenResult result;
  if (lo == hi) {
    result.energy = lo;
  } else {
    const int s_lo = divergence_sign(p, lo, seed);
    const int s_hi = divergence_sign(p, hi, seed);
    if (s_lo == 0) {
      lo = hi = bracket.lo;
    } else if (s_hi == 0) {
      lo = hi = bracket.hi;
    } else {
      require(s_lo != s_hi, ErrorCode::invalid_bracket,
              "divergence sign does not flip across the bracket");
      while (hi - lo > options.tol) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;  // double grid exhausted
        const int s_mid = divergence_sign(p, mid, seed);
        ++result.iterations;
        if (s_mid == 0) {
          lo = hi = mid;
          break;
        }
        if (s_mid == s_lo)
          lo = mid;
        else
          hi = mid;
      }
    }
    result.energy = 0.5 * (lo + hi);
  }
  result.bracket_lo = lo;
  result.bracket_hi = hi;

  const auto sol = propagate(p, result.energy,
                             solution_seed(p, result.energy, seed));
  result.wave = std::make_shared<const WaveSolution>(sol);
  result.tail_exponent =
      classify(*result.wave, options.tail_threshold_exp,
               options.points_per_segment)
          .tail_exponent;
  return result;
}

bool verify_cs(PotentialPtr p, double e_n, double epsilon, const Seed& seed,
               const SolverOptions& options) {
  require(std::isfinite(epsilon) && epsilon > 0.0, ErrorCode::invalid_argument,
          "verification epsilon must be positive");
  const int s_lo = divergence_sign(p, e_n - epsilon, seed);
  const int s_hi = divergence_sign(p, e_n + epsilon, seed);
  require(s_lo != 0 && s_hi != 0, ErrorCode::unreliable_verification,
          "verification probe landed on a convergent state");

  const double delta = epsilon / 1024.0;
  if (delta >= 16.0 * options.tol) {
    const int i_lo = divergence_sign(p, e_n - delta, seed);
    const int i_hi = divergence_sign(p, e_n + delta, seed);
    require(i_lo == s_lo && i_hi == s_hi, ErrorCode::unreliable_verification,
            "epsilon spans another state");
  }
  return s_lo != s_hi;
}

std::vector<EigenResult> spectrum(PotentialPtr p, double e_min, double e_max,
                                  int steps, const Seed& seed,
                                  const SolverOptions& options) {
  const SpectrumScan sc = scan(p, e_min, e_max, steps, seed, options);

  std::vector<EigenResult> results(sc.brackets.size());
  const auto refine = [&](size_t i) {
    results[i] = bisect(p, sc.brackets[i], seed, options);
  };
  const int workers = std::max(1, options.threads);
  if (workers == 1 || sc.brackets.size() <= 1) {
    for (size_t i = 0; i < sc.brackets.size(); ++i) refine(i);
  } else {
    std::vector<std::future<void>> parts;
    for (size_t i = 0; i < sc.brackets.size(); ++i)
      parts.push_back(std::async(std::launch::async, refine, i));
    for (auto& f : parts) f.get();
  }
  std::sort(results.begin(), results.end(),
            [](const EigenResult& a, const EigenResult& b) {
              return a.energy < b.energy;
            });

  const double base_eps =
      options.verify_epsilon > 0.0 ? options.verify_epsilon
                                   : 1000.0 * options.tol;
  for (size_t i = 0; i < results.size(); ++i) {
    double eps = base_eps;
    if (i > 0)
      eps = std::min(eps, 0.25 * (results[i].energy - results[i - 1].energy));
    if (i + 1 < results.size())
      eps = std::min(eps, 0.25 * (results[i + 1].energy - results[i].energy));
    try {
      results[i].verified = eps > 0.0 && verify_cs(p, results[i].energy, eps,
                                                   seed, options);
    } catch (const Error&) {
      results[i].verified = false;
    }
  }
  return results;
}

EigenResult solve_nearest(PotentialPtr p, double energy, const Seed& seed,
                          const SolverOptions& options) {
  require(p != nullptr, ErrorCode::invalid_argument, "null potential");
  require(std::isfinite(energy), ErrorCode::invalid_argument,
          "energy must be finite");
  for (double window = 0.5; window <= 64.0; window *= 2.0) {
    const int steps = std::max(3, static_cast<int>(std::ceil(200.0 * window)));
    const SpectrumScan sc =
        scan(p, energy - window, energy + window, steps, seed, options);
    if (sc.brackets.empty()) continue;
    const EnergyBracket* best = &sc.brackets.front();
    for (const auto& b : sc.brackets) {
      const double mid = 0.5 * (b.lo + b.hi);
      if (std::abs(mid - energy) <
          std::abs(0.5 * (best->lo + best->hi) - energy))
        best = &b;
    }
    return bisect(p, *best, seed, options);
  }
  fail(ErrorCode::no_result, "no convergent state near the requested energy");
}

SelfTuneResult self_tune_bj(PotentialPtr p, double energy, int segment,
                            double tau, const SolverOptions& options) {
  require(p != nullptr, ErrorCode::invalid_argument, "null potential");
  require(segment >= 1 && segment <= p->segments(), ErrorCode::range,
          "seed segment out of range");
  if (p->segments() == 1) {
    // No boundaries to cross: nothing can diverge for any b.
    return {true, 0.0, std::numeric_limits<double>::infinity()};
  }

  const EigenResult nearest = solve_nearest(p, energy, Seed::right(), options);
  const XdReference ref =
      make_xd_reference(*nearest.wave, options.points_per_segment);

  // |x_d|; +infinity marks a b with no detectable onset.
  double x_at_best = 0.0;
  const auto measure = [&](double b) {
    const auto sol =
        propagate(p, energy, Seed::interior(segment, {b, 0.0}));
    try {
      const double x = detect_xd(sol, ref, tau, options.points_per_segment);
      x_at_best = x;
      return std::abs(x);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::not_divergent)
        return std::numeric_limits<double>::infinity();
      throw;
    }
  };

  std::vector<double> candidates;
  for (int dec = 6; dec >= -6; --dec) candidates.push_back(-std::pow(10.0, dec));
  candidates.push_back(0.0);
  for (int dec = -6; dec <= 6; ++dec) candidates.push_back(std::pow(10.0, dec));

  size_t best = 0;
  double f_best = -1.0;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const double f = measure(candidates[i]);
    if (std::isinf(f)) return {true, candidates[i], f};
    if (f > f_best) {
      f_best = f;
      best = i;
    }
  }

  double lo = candidates[best > 0 ? best - 1 : best];
  double hi = candidates[std::min(best + 1, candidates.size() - 1)];
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
  double f1 = measure(x1), f2 = measure(x2);
  double b_found = candidates[best];
  for (int it = 0; it < 160 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi));
       ++it) {
    if (std::isinf(f1)) return {true, x1, f1};
    if (std::isinf(f2)) return {true, x2, f2};
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + gr * (hi - lo);
      f2 = measure(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - gr * (hi - lo);
      f1 = measure(x1);
    }
  }
  b_found = f1 > f2 ? x1 : x2;
  const double f_final = measure(b_found);
  if (std::isinf(f_final)) return {true, b_found, f_final};
  return {false, b_found, x_at_best};
}

}  // namespace cetm
