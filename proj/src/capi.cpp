#include "cetm/cetm.h"

#include <algorithm>
#include <cstring>
#include <memory>
#include <string>
#include <vector>

#include "analysis.hpp"
#include "divergence.hpp"
#include "eigensolver.hpp"
#include "errors.hpp"
#include "oracle.hpp"
#include "potential.hpp"
#include "wave.hpp"

struct cetm_potential {
  cetm::PotentialPtr p;
};

struct cetm_wave {
  std::shared_ptr<const cetm::WaveSolution> w;
};

struct cetm_spectrum {
  std::vector<cetm::EigenResult> results;
};

struct cetm_dataset {
  std::vector<cetm::UncertaintyRecord> records;
  std::vector<std::string> warnings;
};

namespace {

thread_local std::string g_last_error;

cetm_status code_of(cetm::ErrorCode c) {
  using EC = cetm::ErrorCode;
  switch (c) {
    case EC::invalid_argument: return CETM_ERR_INVALID_ARGUMENT;
    case EC::range: return CETM_ERR_RANGE;
    case EC::precondition: return CETM_ERR_PRECONDITION;
    case EC::not_divergent: return CETM_ERR_NOT_DIVERGENT;
    case EC::invalid_bracket: return CETM_ERR_INVALID_BRACKET;
    case EC::unreliable_verification: return CETM_ERR_UNRELIABLE_VERIFICATION;
    case EC::insufficient_data: return CETM_ERR_INSUFFICIENT_DATA;
    case EC::degenerate_input: return CETM_ERR_DEGENERATE_INPUT;
    case EC::no_result: return CETM_ERR_NO_RESULT;
    case EC::io: return CETM_ERR_IO;
    case EC::overflow: return CETM_ERR_OVERFLOW;
    case EC::internal: return CETM_ERR_INTERNAL;
  }
  return CETM_ERR_UNKNOWN;
}

template <typename F>
cetm_status guarded(F&& f) noexcept {
  try {
    f();
    return CETM_OK;
  } catch (const cetm::Error& e) {
    g_last_error = e.what();
    return code_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CETM_ERR_UNKNOWN;
  } catch (...) {
    g_last_error = "unknown failure";
    return CETM_ERR_UNKNOWN;
  }
}

void check(const void* p, const char* what) {
  cetm::require(p != nullptr, cetm::ErrorCode::invalid_argument,
                std::string("null ") + what);
}

cetm::Seed to_seed(const cetm_seed* s) {
  check(s, "seed");
  switch (s->mode) {
    case CETM_SEED_LEFT:
      return cetm::Seed::left();
    case CETM_SEED_RIGHT:
      return cetm::Seed::right();
    case CETM_SEED_INTERIOR:
      return cetm::Seed::interior(s->segment, {s->b_re, s->b_im});
    default:
      cetm::fail(cetm::ErrorCode::invalid_argument, "unknown seed mode");
  }
}

cetm::SolverOptions to_options(const cetm_solver_options* o) {
  cetm::SolverOptions out;
  if (o == nullptr) return out;
  out.tol = o->tol;
  out.tail_threshold_exp = o->tail_threshold_exp;
  out.points_per_segment = o->points_per_segment;
  out.verify_epsilon = o->verify_epsilon;
  out.threads = o->threads;
  return out;
}

cetm::CollectOptions to_collect_options(const cetm_collect_options* o) {
  cetm::CollectOptions out;
  if (o == nullptr) return out;
  out.tau = o->tau;
  out.points_per_segment = o->points_per_segment;
  out.tail_threshold_exp = o->tail_threshold_exp;
  out.kd_segment_offset = o->kd_segment_offset;
  switch (o->pc_mode) {
    case CETM_PC_MAGNITUDE: out.pc_mode = cetm::PcMode::magnitude; break;
    case CETM_PC_REAL: out.pc_mode = cetm::PcMode::real_part; break;
    case CETM_PC_IMAG: out.pc_mode = cetm::PcMode::imag_part; break;
    default:
      cetm::fail(cetm::ErrorCode::invalid_argument, "unknown pc mode");
  }
  out.tol = o->tol;
  out.threads = o->threads;
  return out;
}

cetm_status make_potential(cetm::SegmentedPotential&& p, cetm_potential** out) {
  *out = new cetm_potential{
      std::make_shared<const cetm::SegmentedPotential>(std::move(p))};
  return CETM_OK;
}

cetm_eigen to_eigen(const cetm::EigenResult& r) {
  cetm_eigen out;
  out.energy = r.energy;
  out.bracket_lo = r.bracket_lo;
  out.bracket_hi = r.bracket_hi;
  out.iterations = r.iterations;
  out.tail_exponent = r.tail_exponent;
  out.verified = r.verified ? 1 : 0;
  return out;
}

cetm_record to_record(const cetm::UncertaintyRecord& r) {
  cetm_record out;
  out.e = r.e;
  out.e_n = r.e_n;
  out.delta_e = r.delta_e;
  out.x_d = r.x_d;
  out.delta_x = r.delta_x;
  out.k_d = r.k_d;
  out.p_d_factor = r.p_d_factor;
  out.p_c = r.p_c;
  out.side = r.side == cetm::DetuneSide::above ? CETM_SIDE_ABOVE
                                               : CETM_SIDE_BELOW;
  return out;
}

}  // namespace

extern "C" {

const char* cetm_version(void) { return "1.0.0"; }

const char* cetm_last_error(void) { return g_last_error.c_str(); }

void cetm_seed_left(cetm_seed* s) {
  if (s == nullptr) return;
  *s = {CETM_SEED_LEFT, 0, 0.0, 0.0};
}

void cetm_seed_right(cetm_seed* s) {
  if (s == nullptr) return;
  *s = {CETM_SEED_RIGHT, 0, 0.0, 0.0};
}

void cetm_seed_interior(int segment, double b_re, double b_im, cetm_seed* s) {
  if (s == nullptr) return;
  *s = {CETM_SEED_INTERIOR, segment, b_re, b_im};
}

void cetm_solver_options_init(cetm_solver_options* o) {
  if (o == nullptr) return;
  const cetm::SolverOptions d;
  o->tol = d.tol;
  o->tail_threshold_exp = d.tail_threshold_exp;
  o->points_per_segment = d.points_per_segment;
  o->verify_epsilon = d.verify_epsilon;
  o->threads = d.threads;
}

void cetm_collect_options_init(cetm_collect_options* o) {
  if (o == nullptr) return;
  const cetm::CollectOptions d;
  o->tau = d.tau;
  o->points_per_segment = d.points_per_segment;
  o->tail_threshold_exp = d.tail_threshold_exp;
  o->kd_segment_offset = d.kd_segment_offset;
  o->pc_mode = CETM_PC_MAGNITUDE;
  o->tol = d.tol;
  o->threads = d.threads;
}

cetm_status cetm_potential_harmonic(double xmin, double xmax, int n_segments,
                                    cetm_potential** out) {
  return guarded([&] {
    check(out, "output");
    make_potential(cetm::SegmentedPotential::harmonic(xmin, xmax, n_segments),
                   out);
  });
}

cetm_status cetm_potential_finite_well(double depth, double width,
                                       double padding, int n_segments,
                                       cetm_potential** out) {
  return guarded([&] {
    check(out, "output");
    make_potential(
        cetm::SegmentedPotential::finite_well(depth, width, padding,
                                              n_segments),
        out);
  });
}

cetm_status cetm_potential_hydrogen(double softening, double xmin, double xmax,
                                    int n_segments, cetm_potential** out) {
  return guarded([&] {
    check(out, "output");
    make_potential(cetm::SegmentedPotential::hydrogen_soft_core(
                       softening, xmin, xmax, n_segments),
                   out);
  });
}

cetm_status cetm_potential_from_samples(const double* xs, const double* vs,
                                        size_t n, cetm_potential** out) {
  return guarded([&] {
    check(out, "output");
    check(xs, "sample positions");
    check(vs, "sample values");
    std::vector<std::pair<double, double>> pts(n);
    for (size_t i = 0; i < n; ++i) pts[i] = {xs[i], vs[i]};
    make_potential(cetm::SegmentedPotential::from_samples(pts), out);
  });
}

cetm_status cetm_potential_load(const char* path, cetm_potential** out) {
  return guarded([&] {
    check(out, "output");
    check(path, "path");
    make_potential(cetm::SegmentedPotential::load(path), out);
  });
}

cetm_status cetm_potential_save(const cetm_potential* p, const char* path) {
  return guarded([&] {
    check(p, "potential");
    check(path, "path");
    p->p->save(path);
  });
}

int cetm_potential_segments(const cetm_potential* p) {
  return p == nullptr ? 0 : p->p->segments();
}

cetm_status cetm_potential_domain(const cetm_potential* p, double* xmin,
                                  double* xmax) {
  return guarded([&] {
    check(p, "potential");
    if (xmin != nullptr) *xmin = p->p->x_min();
    if (xmax != nullptr) *xmax = p->p->x_max();
  });
}

cetm_status cetm_potential_segment_value(const cetm_potential* p, int segment,
                                         double* value) {
  return guarded([&] {
    check(p, "potential");
    check(value, "output");
    cetm::require(segment >= 1 && segment <= p->p->segments(),
                  cetm::ErrorCode::range, "segment index out of range");
    *value = p->p->value(segment);
  });
}

void cetm_potential_free(cetm_potential* p) { delete p; }

cetm_status cetm_propagate(const cetm_potential* p, double energy,
                           const cetm_seed* seed, int disable_scaling,
                           cetm_wave** out) {
  return guarded([&] {
    check(p, "potential");
    check(out, "output");
    cetm::PropagateOptions opt;
    opt.scaling = disable_scaling == 0;
    auto sol = cetm::propagate(p->p, energy, to_seed(seed), opt);
    *out = new cetm_wave{
        std::make_shared<const cetm::WaveSolution>(std::move(sol))};
  });
}

cetm_status cetm_wave_energy(const cetm_wave* w, double* energy) {
  return guarded([&] {
    check(w, "wave");
    check(energy, "output");
    *energy = w->w->energy();
  });
}

cetm_status cetm_wave_samples(const cetm_wave* w, int points_per_segment,
                              cetm_wave_sample* buf, size_t cap,
                              size_t* count) {
  return guarded([&] {
    check(w, "wave");
    check(count, "count output");
    const auto samples = cetm::sample_grid(*w->w, points_per_segment);
    *count = samples.size();
    if (buf == nullptr) return;
    const size_t n = std::min(cap, samples.size());
    for (size_t i = 0; i < n; ++i) {
      buf[i].x = samples[i].x;
      buf[i].re_m = samples[i].psi.m.real();
      buf[i].im_m = samples[i].psi.m.imag();
      buf[i].exp2 = samples[i].psi.e;
    }
  });
}

cetm_status cetm_wave_classify(const cetm_wave* w, int64_t tail_threshold_exp,
                               int points_per_segment,
                               cetm_divergence_report* out) {
  return guarded([&] {
    check(w, "wave");
    check(out, "output");
    const auto rep =
        cetm::classify(*w->w, tail_threshold_exp, points_per_segment);
    using C = cetm::DivergenceReport::Class;
    switch (rep.cls) {
      case C::convergent: out->cls = CETM_CLASS_CONVERGENT; break;
      case C::alpha: out->cls = CETM_CLASS_ALPHA; break;
      case C::beta_plus: out->cls = CETM_CLASS_BETA_PLUS; break;
      case C::beta_minus: out->cls = CETM_CLASS_BETA_MINUS; break;
    }
    out->sign_left = rep.sign_left;
    out->sign_right = rep.sign_right;
    out->tail_exponent = rep.tail_exponent;
  });
}

cetm_status cetm_wave_interior_stats(const cetm_wave* w,
                                     int points_per_segment,
                                     cetm_interior_stats* out) {
  return guarded([&] {
    check(w, "wave");
    check(out, "output");
    const auto stats = cetm::interior_stats(*w->w, points_per_segment);
    out->log2_max = stats.log2_max;
    out->x_peak = stats.x_peak;
  });
}

cetm_status cetm_wave_detect_xd(const cetm_wave* w, const cetm_wave* reference,
                                double tau, int points_per_segment,
                                double* x_d) {
  return guarded([&] {
    check(w, "wave");
    check(reference, "reference wave");
    check(x_d, "output");
    *x_d = cetm::detect_xd(*w->w, *reference->w, tau, points_per_segment);
  });
}

cetm_status cetm_hamiltonian_residual(const cetm_wave* w, double step,
                                      double* residual) {
  return guarded([&] {
    check(w, "wave");
    check(residual, "output");
    *residual = cetm::hamiltonian_residual(*w->w, step);
  });
}

cetm_status cetm_divergence_sign(const cetm_potential* p, double energy,
                                 const cetm_seed* seed, int* sign) {
  return guarded([&] {
    check(p, "potential");
    check(sign, "output");
    *sign = cetm::divergence_sign(p->p, energy, to_seed(seed));
  });
}

void cetm_wave_free(cetm_wave* w) { delete w; }

cetm_status cetm_solve_spectrum(const cetm_potential* p, double e_min,
                                double e_max, int steps, const cetm_seed* seed,
                                const cetm_solver_options* options,
                                cetm_spectrum** out) {
  return guarded([&] {
    check(p, "potential");
    check(out, "output");
    auto results =
        cetm::spectrum(p->p, e_min, e_max, steps, to_seed(seed),
                       to_options(options));
    *out = new cetm_spectrum{std::move(results)};
  });
}

cetm_status cetm_solve_nearest(const cetm_potential* p, double energy,
                               const cetm_seed* seed,
                               const cetm_solver_options* options,
                               cetm_spectrum** out) {
  return guarded([&] {
    check(p, "potential");
    check(out, "output");
    auto result =
        cetm::solve_nearest(p->p, energy, to_seed(seed), to_options(options));
    *out = new cetm_spectrum{{std::move(result)}};
  });
}

cetm_status cetm_verify_cs(const cetm_potential* p, double e_n, double epsilon,
                           const cetm_seed* seed,
                           const cetm_solver_options* options, int* flag) {
  return guarded([&] {
    check(p, "potential");
    check(flag, "output");
    *flag = cetm::verify_cs(p->p, e_n, epsilon, to_seed(seed),
                            to_options(options))
                ? 1
                : 0;
  });
}

cetm_status cetm_self_tune_bj(const cetm_potential* p, double energy,
                              int segment, double tau,
                              const cetm_solver_options* options,
                              cetm_self_tune* out) {
  return guarded([&] {
    check(p, "potential");
    check(out, "output");
    const auto r =
        cetm::self_tune_bj(p->p, energy, segment, tau, to_options(options));
    out->convergent = r.convergent ? 1 : 0;
    out->b = r.b;
    out->x_d = r.x_d;
  });
}

size_t cetm_spectrum_size(const cetm_spectrum* s) {
  return s == nullptr ? 0 : s->results.size();
}

cetm_status cetm_spectrum_get(const cetm_spectrum* s, size_t index,
                              cetm_eigen* out) {
  return guarded([&] {
    check(s, "spectrum");
    check(out, "output");
    cetm::require(index < s->results.size(), cetm::ErrorCode::range,
                  "spectrum index out of range");
    *out = to_eigen(s->results[index]);
  });
}

cetm_status cetm_spectrum_wave(const cetm_spectrum* s, size_t index,
                               cetm_wave** out) {
  return guarded([&] {
    check(s, "spectrum");
    check(out, "output");
    cetm::require(index < s->results.size(), cetm::ErrorCode::range,
                  "spectrum index out of range");
    const auto& wave = s->results[index].wave;
    cetm::require(wave != nullptr, cetm::ErrorCode::no_result,
                  "spectrum entry carries no wavefunction");
    *out = new cetm_wave{wave};
  });
}

void cetm_spectrum_free(cetm_spectrum* s) { delete s; }

cetm_status cetm_dataset_new(cetm_dataset** out) {
  return guarded([&] {
    check(out, "output");
    *out = new cetm_dataset{};
  });
}

cetm_status cetm_dataset_collect(cetm_dataset* d, const cetm_potential* p,
                                 const cetm_spectrum* s, size_t index,
                                 const double* detunings, size_t n, int side,
                                 const cetm_collect_options* options) {
  return guarded([&] {
    check(d, "dataset");
    check(p, "potential");
    check(s, "spectrum");
    check(detunings, "detunings");
    cetm::require(index < s->results.size(), cetm::ErrorCode::range,
                  "spectrum index out of range");
    cetm::require(side == CETM_SIDE_ABOVE || side == CETM_SIDE_BELOW,
                  cetm::ErrorCode::invalid_argument, "unknown detuning side");
    const std::vector<double> dets(detunings, detunings + n);
    auto result = cetm::collect_uncertainty_dataset(
        p->p, s->results[index], dets,
        side == CETM_SIDE_ABOVE ? cetm::DetuneSide::above
                                : cetm::DetuneSide::below,
        to_collect_options(options));
    d->records.insert(d->records.end(), result.records.begin(),
                      result.records.end());
    d->warnings.insert(d->warnings.end(),
                       std::make_move_iterator(result.warnings.begin()),
                       std::make_move_iterator(result.warnings.end()));
  });
}

size_t cetm_dataset_size(const cetm_dataset* d) {
  return d == nullptr ? 0 : d->records.size();
}

cetm_status cetm_dataset_get(const cetm_dataset* d, size_t index,
                             cetm_record* out) {
  return guarded([&] {
    check(d, "dataset");
    check(out, "output");
    cetm::require(index < d->records.size(), cetm::ErrorCode::range,
                  "record index out of range");
    *out = to_record(d->records[index]);
  });
}

size_t cetm_dataset_warning_count(const cetm_dataset* d) {
  return d == nullptr ? 0 : d->warnings.size();
}

const char* cetm_dataset_warning(const cetm_dataset* d, size_t index) {
  if (d == nullptr || index >= d->warnings.size()) return nullptr;
  return d->warnings[index].c_str();
}

cetm_status cetm_dataset_csv(const cetm_dataset* d, char* buf, size_t cap,
                             size_t* length) {
  return guarded([&] {
    check(d, "dataset");
    check(length, "length output");
    const std::string csv = cetm::dataset_csv(d->records);
    *length = csv.size();
    if (buf == nullptr) return;
    cetm::require(cap > csv.size(), cetm::ErrorCode::range,
                  "buffer too small for CSV");
    std::memcpy(buf, csv.data(), csv.size());
    buf[csv.size()] = '\0';
  });
}

cetm_status cetm_fit_uncertainty(const cetm_dataset* d, cetm_fit* out) {
  return guarded([&] {
    check(d, "dataset");
    check(out, "output");
    const auto fit = cetm::fit_uncertainty(d->records);
    out->a = fit.a;
    out->median_rel_residual = fit.median_rel_residual;
    out->median_log_residual = fit.median_log_residual;
    out->n_records = fit.n_records;
  });
}

cetm_status cetm_check_inequality(const cetm_record* record, double a,
                                  int* holds) {
  return guarded([&] {
    check(record, "record");
    check(holds, "output");
    cetm::UncertaintyRecord r;
    r.e = record->e;
    r.e_n = record->e_n;
    r.delta_e = record->delta_e;
    r.x_d = record->x_d;
    r.delta_x = record->delta_x;
    r.k_d = record->k_d;
    r.p_d_factor = record->p_d_factor;
    r.p_c = record->p_c;
    r.side = record->side == CETM_SIDE_BELOW ? cetm::DetuneSide::below
                                             : cetm::DetuneSide::above;
    *holds = cetm::check_uncertainty_inequality(r, a) ? 1 : 0;
  });
}

void cetm_dataset_free(cetm_dataset* d) { delete d; }

cetm_status cetm_oracle_numerov(const cetm_potential* p, double bracket_lo,
                                double bracket_hi, double grid_step, double tol,
                                cetm_oracle_result* out) {
  return guarded([&] {
    check(p, "potential");
    check(out, "output");
    const auto r = cetm::oracle::numerov_eigen(*p->p, bracket_lo, bracket_hi,
                                               grid_step, tol);
    out->eigenvalue = r.eigenvalue;
    out->method = CETM_ORACLE_NUMEROV;
    out->grid_step = r.grid_step;
    out->nodes = r.nodes;
  });
}

cetm_status cetm_oracle_harmonic_energy(int n, double* energy) {
  return guarded([&] {
    check(energy, "output");
    *energy = cetm::oracle::analytic_harmonic(n).energy;
  });
}

cetm_status cetm_oracle_harmonic_psi(int n, double x, double* psi) {
  return guarded([&] {
    check(psi, "output");
    *psi = cetm::oracle::analytic_harmonic(n).psi(x);
  });
}

cetm_status cetm_oracle_finite_well(double depth, double width, double* buf,
                                    size_t cap, size_t* count) {
  return guarded([&] {
    check(count, "count output");
    const auto roots = cetm::oracle::analytic_finite_well(depth, width);
    *count = roots.size();
    if (buf == nullptr) return;
    const size_t n = std::min(cap, roots.size());
    std::copy_n(roots.begin(), n, buf);
  });
}

cetm_status cetm_oracle_compare(double cetm_energy,
                                const cetm_oracle_result* oracle, double tol,
                                cetm_comparison* out) {
  return guarded([&] {
    check(oracle, "oracle result");
    check(out, "output");
    cetm::EigenResult lhs;
    lhs.energy = cetm_energy;
    cetm::oracle::OracleResult rhs;
    rhs.eigenvalue = oracle->eigenvalue;
    rhs.method = static_cast<cetm::oracle::Method>(oracle->method);
    rhs.grid_step = oracle->grid_step;
    rhs.nodes = oracle->nodes;
    const auto cmp = cetm::oracle::compare(lhs, rhs, tol);
    out->cetm = cmp.cetm;
    out->oracle = cmp.oracle;
    out->abs_diff = cmp.abs_diff;
    out->rel_diff = cmp.rel_diff;
    out->pass = cmp.pass ? 1 : 0;
  });
}

}  // extern "C"
