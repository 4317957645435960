#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "cetm/cetm.h"
#include "doctest.h"

namespace {

struct Potential {
  cetm_potential* p = nullptr;
  ~Potential() { cetm_potential_free(p); }
};

}  // namespace

TEST_CASE("version and error text are always available") {
  CHECK(cetm_version() != nullptr);
  CHECK(cetm_last_error() != nullptr);
}

TEST_CASE("null arguments are rejected with a message") {
  CHECK(cetm_potential_harmonic(-1.0, 1.0, 4, nullptr) ==
        CETM_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(cetm_last_error()) > 0);
  CHECK(cetm_potential_segments(nullptr) == 0);
  double lo = 0.0;
  double hi = 0.0;
  CHECK(cetm_potential_domain(nullptr, &lo, &hi) ==
        CETM_ERR_INVALID_ARGUMENT);
}

TEST_CASE("potential lifecycle through the C surface") {
  Potential h;
  REQUIRE(cetm_potential_harmonic(-8.0, 8.0, 400, &h.p) == CETM_OK);
  CHECK(cetm_potential_segments(h.p) == 400);
  double lo = 0.0;
  double hi = 0.0;
  REQUIRE(cetm_potential_domain(h.p, &lo, &hi) == CETM_OK);
  CHECK(lo == -8.0);
  CHECK(hi == 8.0);
  double v = -1.0;
  REQUIRE(cetm_potential_segment_value(h.p, 200, &v) == CETM_OK);
  CHECK(v >= 0.0);
  CHECK(cetm_potential_segment_value(h.p, 401, &v) == CETM_ERR_RANGE);

  const auto path =
      (std::filesystem::temp_directory_path() / "cetm_capi_pot.txt").string();
  REQUIRE(cetm_potential_save(h.p, path.c_str()) == CETM_OK);
  Potential loaded;
  REQUIRE(cetm_potential_load(path.c_str(), &loaded.p) == CETM_OK);
  CHECK(cetm_potential_segments(loaded.p) == 400);
  double v2 = -1.0;
  REQUIRE(cetm_potential_segment_value(loaded.p, 200, &v2) == CETM_OK);
  // the sample-mean file encoding reaches means only on the sample-ulp
  // grid, so a large value-to-sample dynamic range costs the last bits
  CHECK(v2 == doctest::Approx(v).epsilon(1e-12));
  std::filesystem::remove(path);

  CHECK(cetm_potential_load("/no/such/file", &loaded.p) == CETM_ERR_IO);
}

TEST_CASE("propagation, classification, and the two-call sample getter") {
  Potential h;
  REQUIRE(cetm_potential_harmonic(-8.0, 8.0, 400, &h.p) == CETM_OK);
  cetm_seed seed;
  cetm_seed_right(&seed);

  cetm_wave* w = nullptr;
  REQUIRE(cetm_propagate(h.p, 0.45, &seed, 0, &w) == CETM_OK);
  double e = 0.0;
  CHECK(cetm_wave_energy(w, &e) == CETM_OK);
  CHECK(e == 0.45);

  size_t count = 0;
  REQUIRE(cetm_wave_samples(w, 4, nullptr, 0, &count) == CETM_OK);
  CHECK(count == 1601);
  std::vector<cetm_wave_sample> buf(count);
  REQUIRE(cetm_wave_samples(w, 4, buf.data(), buf.size(), &count) == CETM_OK);
  CHECK(buf.front().x == -8.0);
  CHECK(buf.back().x == 8.0);

  cetm_divergence_report rep;
  // a 0.05 detuning on this domain builds ~40 bits of edge excess
  REQUIRE(cetm_wave_classify(w, 32, 4, &rep) == CETM_OK);
  CHECK(rep.cls != CETM_CLASS_CONVERGENT);
  CHECK(rep.sign_right == 0);
  cetm_wave_free(w);

  int s_lo = 0;
  int s_hi = 0;
  REQUIRE(cetm_divergence_sign(h.p, 0.45, &seed, &s_lo) == CETM_OK);
  REQUIRE(cetm_divergence_sign(h.p, 0.55, &seed, &s_hi) == CETM_OK);
  CHECK(s_lo * s_hi == -1);

  // oscillatory tail precondition surfaces as its own status
  CHECK(cetm_propagate(h.p, 40.0, &seed, 0, &w) == CETM_ERR_PRECONDITION);
}

TEST_CASE("spectrum to wave to onset, all through handles") {
  Potential h;
  REQUIRE(cetm_potential_harmonic(-8.0, 8.0, 400, &h.p) == CETM_OK);
  cetm_seed seed;
  cetm_seed_right(&seed);
  cetm_solver_options opts;
  cetm_solver_options_init(&opts);

  cetm_spectrum* sp = nullptr;
  REQUIRE(cetm_solve_spectrum(h.p, 0.0, 2.0, 200, &seed, &opts, &sp) ==
          CETM_OK);
  REQUIRE(cetm_spectrum_size(sp) == 2);
  cetm_eigen e0;
  REQUIRE(cetm_spectrum_get(sp, 0, &e0) == CETM_OK);
  CHECK(e0.verified == 1);
  CHECK(std::abs(e0.energy - 0.5) < 1e-3);
  cetm_eigen missing;
  CHECK(cetm_spectrum_get(sp, 5, &missing) == CETM_ERR_RANGE);

  cetm_wave* ref = nullptr;
  REQUIRE(cetm_spectrum_wave(sp, 0, &ref) == CETM_OK);
  cetm_wave* det = nullptr;
  REQUIRE(cetm_propagate(h.p, e0.energy + 1e-4, &seed, 0, &det) == CETM_OK);
  double xd = 0.0;
  REQUIRE(cetm_wave_detect_xd(det, ref, 10.0, 4, &xd) == CETM_OK);
  CHECK(xd < 0.0);

  cetm_wave_free(det);
  cetm_wave_free(ref);
  cetm_spectrum_free(sp);
}

TEST_CASE("empty scan range reports invalid arguments") {
  Potential h;
  REQUIRE(cetm_potential_harmonic(-8.0, 8.0, 400, &h.p) == CETM_OK);
  cetm_seed seed;
  cetm_seed_right(&seed);
  cetm_solver_options opts;
  cetm_solver_options_init(&opts);
  cetm_spectrum* sp = nullptr;
  CHECK(cetm_solve_spectrum(h.p, 2.0, 0.0, 200, &seed, &opts, &sp) ==
        CETM_ERR_INVALID_ARGUMENT);
}

TEST_CASE("dataset collection, CSV rendering, and the fit") {
  Potential h;
  REQUIRE(cetm_potential_harmonic(-8.0, 8.0, 1000, &h.p) == CETM_OK);
  cetm_seed seed;
  cetm_seed_right(&seed);
  cetm_solver_options opts;
  cetm_solver_options_init(&opts);
  cetm_spectrum* sp = nullptr;
  REQUIRE(cetm_solve_spectrum(h.p, 0.0, 1.0, 100, &seed, &opts, &sp) ==
          CETM_OK);
  REQUIRE(cetm_spectrum_size(sp) == 1);

  cetm_collect_options copts;
  cetm_collect_options_init(&copts);
  const double detunings[] = {1e-3, 1e-4, 1e-5, 1e-6};
  cetm_dataset* d = nullptr;
  REQUIRE(cetm_dataset_new(&d) == CETM_OK);
  REQUIRE(cetm_dataset_collect(d, h.p, sp, 0, detunings, 4, CETM_SIDE_ABOVE,
                               &copts) == CETM_OK);
  REQUIRE(cetm_dataset_collect(d, h.p, sp, 0, detunings, 4, CETM_SIDE_BELOW,
                               &copts) == CETM_OK);
  CHECK(cetm_dataset_size(d) == 8);
  CHECK(cetm_dataset_warning_count(d) == 0);

  cetm_record rec;
  REQUIRE(cetm_dataset_get(d, 0, &rec) == CETM_OK);
  CHECK(rec.side == CETM_SIDE_ABOVE);
  CHECK(rec.delta_e == doctest::Approx(detunings[0]).epsilon(1e-12));

  size_t len = 0;
  REQUIRE(cetm_dataset_csv(d, nullptr, 0, &len) == CETM_OK);
  CHECK(len > 0);
  std::string csv(len + 1, '\0');
  // a buffer of exactly `len` bytes has no room for the terminator
  CHECK(cetm_dataset_csv(d, csv.data(), len, &len) == CETM_ERR_RANGE);
  REQUIRE(cetm_dataset_csv(d, csv.data(), csv.size(), &len) == CETM_OK);
  csv.resize(len);
  CHECK(csv.rfind("E,E_n,delta_E,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);

  cetm_fit fit;
  REQUIRE(cetm_fit_uncertainty(d, &fit) == CETM_OK);
  CHECK(std::isfinite(fit.a));
  CHECK(fit.n_records == 8);
  for (size_t i = 0; i < 8; ++i) {
    cetm_record r;
    REQUIRE(cetm_dataset_get(d, i, &r) == CETM_OK);
    int holds = 0;
    REQUIRE(cetm_check_inequality(&r, fit.a, &holds) == CETM_OK);
    CHECK(holds == 1);
  }

  cetm_dataset_free(d);
  cetm_spectrum_free(sp);
}

TEST_CASE("oracle entry points mirror the native ones") {
  double e5 = 0.0;
  REQUIRE(cetm_oracle_harmonic_energy(5, &e5) == CETM_OK);
  CHECK(e5 == 5.5);
  double psi0 = 0.0;
  REQUIRE(cetm_oracle_harmonic_psi(0, 0.0, &psi0) == CETM_OK);
  CHECK(psi0 == doctest::Approx(std::pow(M_PI, -0.25)).epsilon(1e-14));

  size_t count = 0;
  REQUIRE(cetm_oracle_finite_well(10.0, 2.0, nullptr, 0, &count) == CETM_OK);
  REQUIRE(count == 3);
  double roots[3];
  REQUIRE(cetm_oracle_finite_well(10.0, 2.0, roots, 3, &count) == CETM_OK);
  CHECK(roots[0] == doctest::Approx(0.819740073767).epsilon(1e-9));

  Potential w;
  REQUIRE(cetm_potential_finite_well(10.0, 2.0, 8.0, 3, &w.p) == CETM_OK);
  cetm_oracle_result onum;
  REQUIRE(cetm_oracle_numerov(w.p, 0.7, 0.9, 1e-3, 1e-10, &onum) == CETM_OK);
  CHECK(std::abs(onum.eigenvalue - roots[0]) < 1e-5);
  CHECK(cetm_oracle_numerov(w.p, 1.0, 1.2, 1e-3, 1e-10, &onum) ==
        CETM_ERR_INVALID_BRACKET);

  cetm_comparison cmp;
  REQUIRE(cetm_oracle_compare(roots[0] + 5e-11, &onum, 1e-10, &cmp) == CETM_OK);
  // abs_diff against the numerov value, not the analytic root
  CHECK(cmp.oracle == onum.eigenvalue);
}

TEST_CASE("self tuning and verification cross the boundary intact") {
  Potential h;
  REQUIRE(cetm_potential_harmonic(-8.0, 8.0, 400, &h.p) == CETM_OK);
  cetm_seed seed;
  cetm_seed_right(&seed);
  cetm_solver_options opts;
  cetm_solver_options_init(&opts);
  cetm_spectrum* sp = nullptr;
  REQUIRE(cetm_solve_spectrum(h.p, 0.0, 1.0, 100, &seed, &opts, &sp) ==
          CETM_OK);
  cetm_eigen e0;
  REQUIRE(cetm_spectrum_get(sp, 0, &e0) == CETM_OK);

  int flag = 0;
  REQUIRE(cetm_verify_cs(h.p, e0.energy, 1e-9, &seed, &opts, &flag) ==
          CETM_OK);
  CHECK(flag == 1);

  cetm_self_tune st;
  REQUIRE(cetm_self_tune_bj(h.p, e0.energy + 1e-3, 200, 10.0, &opts, &st) ==
          CETM_OK);
  CHECK(st.convergent == 0);
  CHECK(std::isfinite(st.b));
  CHECK(std::abs(st.x_d) < 8.0);

  cetm_spectrum_free(sp);
}
