#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "emgfinger/controller/admittance.hpp"
#include "emgfinger/controller/conditioner.hpp"
#include "emgfinger/controller/pdm.hpp"
#include "emgfinger/controller/tension_model.hpp"
#include "emgfinger/random.hpp"

using namespace emgfinger;
using namespace emgfinger::controller;

TEST_CASE("admittance: one step and steady state") {
  Admittance adm(Admittance::Params{1.0, 1.0, 0.02});
  // 10.2 N of excess tension: v1 = 0.02 * 10.2 / 1.02.
  CHECK(std::abs(adm.step(10.2, 0.0) - 0.2) <= 1e-12);
  double v = 0.0;
  for (int i = 0; i < 2000; ++i) v = adm.step(10.2, 0.0);
  CHECK(std::abs(v - 10.2) <= 10.2 * 1e-3);
  // Closed form of the recursion: v_k = 10.2 (1 - (m / (m + d dt))^k).
  Admittance again(Admittance::Params{1.0, 1.0, 0.02});
  for (int k = 1; k <= 300; ++k) {
    const double expect = 10.2 * (1.0 - std::pow(1.0 / 1.02, k));
    CHECK(again.step(10.2, 0.0) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("admittance: sign convention, reset and set_velocity") {
  Admittance adm;
  CHECK(adm.step(5.0, 10.0) < 0.0);  // tension below command pulls
  adm.reset();
  CHECK(adm.velocity() == 0.0);
  CHECK(adm.step(10.0, 10.0) == 0.0);
  adm.set_velocity(0.3);
  CHECK(adm.step(10.0, 10.0) == doctest::Approx(0.3 / 1.02));
  CHECK_THROWS_AS(Admittance(Admittance::Params{0.0, 1.0, 0.02}), std::invalid_argument);
  CHECK_THROWS_AS(Admittance(Admittance::Params{1.0, -1.0, 0.02}), std::invalid_argument);
}

TEST_CASE("conditioner: clamp then slew on random streams") {
  ConditionerConfig cfg;
  Rng rng(2024);
  double prev = 0.0;
  std::size_t clamped_hits = 0;
  for (int i = 0; i < 100000; ++i) {
    const double raw = rng.uniform() < 0.1 ? rng.uniform(-100.0, 100.0) : rng.uniform(-5.0, 40.0);
    const double out = condition_tension(raw, prev, cfg);
    REQUIRE(out >= 0.0);
    REQUIRE(out <= 30.0);
    REQUIRE(std::abs(out - prev) <= 2.0 + 1e-12);
    // Output is the admissible value nearest the clamped request.
    const double want = std::clamp(raw, 0.0, 30.0);
    REQUIRE(out == doctest::Approx(std::clamp(want, prev - 2.0, prev + 2.0)));
    if (raw > 30.0 || raw < 0.0) ++clamped_hits;
    prev = out;
  }
  CHECK(clamped_hits > 1000);
}

TEST_CASE("conditioner: force deadband") {
  ConditionerConfig cfg;
  Rng rng(5);
  for (int i = 0; i < 100000; ++i) {
    const double f = rng.uniform(0.0, 1.0);
    REQUIRE(condition_force(f, cfg) == 0.0);
  }
  CHECK(condition_force(1.0, cfg) == 1.0);  // boundary passes
  CHECK(condition_force(4.8, cfg) == 4.8);
  CHECK(scale_force_output(0.6, cfg) == doctest::Approx(4.8));
  CHECK(scale_force_output(-0.1, cfg) == 0.0);
  CHECK(scale_force_output(1.4, cfg) == 8.0);
  ConditionerConfig bad;
  bad.slew = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("PDM: single call emits round(density * slots) pulses") {
  Rng rng(9);
  for (int i = 0; i < 2000; ++i) {
    const double v = rng.uniform(-10.0, 10.0);
    const auto train = pdm_generate(v, 10.0, 200);
    CHECK(train.pulses.size() == 200);
    CHECK(train.count() == static_cast<std::size_t>(std::floor(std::abs(v) / 10.0 * 200.0 + 0.5)));
    CHECK(train.release == (v > 0.0));
  }
  CHECK(pdm_generate(10.0, 10.0, 200).count() == 200);
  CHECK(pdm_generate(0.0, 10.0, 200).count() == 0);
  CHECK_THROWS_AS(pdm_generate(10.5, 10.0, 200), std::invalid_argument);
  CHECK_THROWS_AS(pdm_generate(std::nan(""), 10.0, 200), std::invalid_argument);
}

TEST_CASE("PDM: pulses are spread and the stream carries the remainder") {
  const auto train = pdm_generate(2.5, 10.0, 200);  // every fourth slot
  for (std::size_t i = 0; i + 4 <= train.pulses.size(); i += 4) {
    CHECK(std::count(train.pulses.begin() + static_cast<long>(i), train.pulses.begin() + static_cast<long>(i + 4),
                     std::uint8_t{1}) == 1);
  }
  PdmGenerator gen(10.0, 7);
  std::size_t total = 0;
  for (int k = 0; k < 1000; ++k) total += gen.next(-0.123).count();
  const double ideal = 0.0123 * 7 * 1000;
  CHECK(std::abs(static_cast<double>(total) - ideal) <= 1.0);
  CHECK(gen.total_pulses() == total);
}

namespace {

// Smallest squared-error non-decreasing fit via the min-max formula.
std::vector<double> isotonic_oracle(const std::vector<double>& y) {
  const std::size_t n = y.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j <= i; ++j) {
      double worst = std::numeric_limits<double>::infinity();
      for (std::size_t k = i; k < n; ++k) {
        double s = 0.0;
        for (std::size_t m = j; m <= k; ++m) s += y[m];
        worst = std::min(worst, s / static_cast<double>(k - j + 1));
      }
      best = std::max(best, worst);
    }
    out[i] = best;
  }
  return out;
}

}  // namespace

TEST_CASE("isotonic fit agrees with the min-max oracle") {
  Rng rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(12);
    std::vector<double> y(n);
    for (auto& v : y) v = rng.uniform(-1.0, 1.0) + 0.1 * static_cast<double>(&v - y.data());
    const auto fit = isotonic_fit(y);
    const auto expect = isotonic_oracle(y);
    REQUIRE(fit.size() == n);
    for (std::size_t i = 0; i < n; ++i) CHECK(fit[i] == doctest::Approx(expect[i]).epsilon(1e-12));
  }
  CHECK(isotonic_fit(std::vector<double>{}).empty());
  CHECK(isotonic_fit(std::vector<double>{3, 1, 2}) == std::vector<double>{2, 2, 2});
}

TEST_CASE("surface fit recovers an exact polynomial") {
  // T = 0.5 + 2F - 0.1F^2 + 0.01F^3 + 0.3p - 0.02p^2 + 0.05Fp
  auto truth = [](double f, double p) {
    return 0.5 + 2 * f - 0.1 * f * f + 0.01 * f * f * f + 0.3 * p - 0.02 * p * p + 0.05 * f * p;
  };
  std::vector<CalibrationSample> samples;
  for (int i = 0; i <= 10; ++i)
    for (int j = 0; j <= 6; ++j) {
      const double f = 0.8 * i, p = 5.0 + 1.5 * j;
      samples.push_back({f, p, truth(f, p)});
    }
  const auto surf = fit_surface(samples, 3, 2);
  CHECK(surf.coefficient(0, 0) == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(surf.coefficient(1, 0) == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(surf.coefficient(3, 0) == doctest::Approx(0.01).epsilon(1e-8));
  CHECK(surf.coefficient(1, 1) == doctest::Approx(0.05).epsilon(1e-8));
  CHECK(surf.coefficient(2, 2) == doctest::Approx(0.0).epsilon(1e-8));
  CHECK(surf.residual_rmse() < 1e-9);
  CHECK(surf.evaluate(3.3, 7.7) == doctest::Approx(truth(3.3, 7.7)));
}

TEST_CASE("surface fit rejects degenerate sampling") {
  std::vector<CalibrationSample> line;
  for (int i = 0; i < 40; ++i) line.push_back({0.1 * i, 5.0, 1.0 * i});
  CHECK_THROWS_AS(fit_surface(line, 3, 2), DegenerateSamplingError);
  std::vector<CalibrationSample> few(5, {1.0, 1.0, 1.0});
  CHECK_THROWS_AS(fit_surface(few, 3, 2), DegenerateSamplingError);
}

TEST_CASE("curve from randomized fits is monotone and zero-anchored") {
  Rng rng(31);
  const auto grid = uniform_grid(0.0, 8.0, 33);
  for (int fit = 0; fit < 100; ++fit) {
    // Random, often non-monotone, truth plus noise.
    const double a1 = rng.uniform(-1.0, 5.0), a2 = rng.uniform(-0.5, 0.5), a3 = rng.uniform(-0.05, 0.05);
    const double b1 = rng.uniform(-1.0, 1.0), c = rng.uniform(-0.3, 0.3);
    std::vector<CalibrationSample> samples;
    for (int k = 0; k < 300; ++k) {
      const double f = rng.uniform(0.0, 8.0), p = rng.uniform(2.0, 15.0);
      const double t = a1 * f + a2 * f * f + a3 * f * f * f + b1 * p + c * f * p + rng.normal(0.0, 0.5);
      samples.push_back({f, p, t});
    }
    const auto surf = fit_surface(samples);
    const auto curve = derive_curve_1d(surf, uniform_grid(2.0, 15.0, 10), grid);
    REQUIRE(curve.knots().size() == grid.size());
    CHECK(curve.force_to_tension(0.0) == 0.0);
    CHECK(curve.values().front() == 0.0);
    for (std::size_t i = 1; i < curve.values().size(); ++i) {
      REQUIRE(curve.values()[i] >= curve.values()[i - 1]);
      REQUIRE(curve.values()[i] >= 0.0);
    }
    double last = 0.0;
    for (double f = 0.0; f <= 10.0; f += 0.05) {
      const double t = curve.force_to_tension(f);
      REQUIRE(t >= last - 1e-12);
      last = t;
    }
  }
}

TEST_CASE("curve interpolation, extrapolation and inverse") {
  const TensionCurve1D curve({0.0, 2.0, 4.0}, {0.0, 6.0, 10.0});
  CHECK(curve.force_to_tension(1.0) == doctest::Approx(3.0));
  CHECK(curve.force_to_tension(3.0) == doctest::Approx(8.0));
  CHECK(curve.force_to_tension(6.0) == doctest::Approx(14.0));  // last slope continues
  CHECK_THROWS_AS(curve.force_to_tension(-0.1), std::invalid_argument);
  for (double f : {0.0, 0.7, 2.0, 3.9, 5.5}) {
    CHECK(curve.tension_to_force(curve.force_to_tension(f)) == doctest::Approx(f));
  }
  CHECK(curve.tension_to_force(-1.0) == 0.0);
  const TensionCurve1D flat({0.0, 1.0, 2.0}, {0.0, 0.0, 3.0});
  CHECK(flat.tension_to_force(0.0) == 0.0);
  CHECK(flat.tension_to_force(1.5) == doctest::Approx(1.5));
  CHECK_THROWS_AS(TensionCurve1D({0.0, 1.0}, {0.0, -1.0}), std::invalid_argument);
  CHECK_THROWS_AS(TensionCurve1D({0.5, 1.0}, {0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(TensionCurve1D({0.0, 0.0}, {0.0, 1.0}), std::invalid_argument);
}

TEST_CASE("tension model JSON round trip") {
  TensionModel m;
  m.surface = TensionSurface2D(1, 1, {0.1, 0.2, 0.3, 0.4}, 0.05);
  m.curve = TensionCurve1D({0.0, 1.0, 8.0}, {0.0, 2.5, 20.0});
  m.config = {{"note", "x"}};
  const auto back = tension_model_from_json(to_json(m));
  CHECK(back.surface.coefficients() == m.surface.coefficients());
  CHECK(back.surface.residual_rmse() == m.surface.residual_rmse());
  CHECK(back.curve.knots() == m.curve.knots());
  CHECK(back.curve.values() == m.curve.values());
  CHECK(to_json(back) == to_json(m));
}
