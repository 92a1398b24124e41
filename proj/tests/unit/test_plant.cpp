#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "emgfinger/plant/finger.hpp"
#include "emgfinger/plant/pattern.hpp"
#include "emgfinger/plant/subject.hpp"

using namespace emgfinger;
using namespace emgfinger::plant;

TEST_CASE("finger statics: torque balance and tendon compatibility") {
  const PlantConfig c = PlantConfig{}.noise_free();
  const FingerPlant plant(c);
  const double joint_c = c.moment_arm1 * c.moment_arm1 / c.stiffness1 + c.moment_arm2 * c.moment_arm2 / c.stiffness2;
  double last_t = -1.0;
  for (double p = 0.0; p <= c.travel; p += 0.05) {
    const PlantState s = plant.solve(p);
    CAPTURE(p);
    REQUIRE(s.tension >= last_t - 1e-12);
    last_t = s.tension;
    if (p <= c.tendon_slack) {
      CHECK(s.tension == 0.0);
      CHECK(s.force == 0.0);
    }
    const double d1 = s.pose.theta1 - c.rest_angle1, d2 = s.pose.theta2 - c.rest_angle2;
    const double excursion = c.moment_arm1 * d1 + c.moment_arm2 * d2;
    // Actuator travel beyond slack = joint excursion + tendon stretch.
    CHECK(std::max(0.0, p - c.tendon_slack) == doctest::Approx(excursion + s.tension / c.tendon_stiffness));
    if (!s.contact) {
      // Free finger: each joint spring carries r_i T.
      CHECK(c.stiffness1 * d1 == doctest::Approx(c.moment_arm1 * s.tension));
      CHECK(c.stiffness2 * d2 == doctest::Approx(c.moment_arm2 * s.tension));
      CHECK(s.force == 0.0);
      CHECK(excursion <= c.contact_excursion + 1e-9);
    } else {
      const double t_contact = c.contact_excursion / joint_c;
      CHECK(excursion == doctest::Approx(c.contact_excursion + c.contact_compliance * (s.tension - t_contact)));
      CHECK(s.force == doctest::Approx(plant.pose_gain(s.pose) * s.tension));
      CHECK(s.force > 0.0);
    }
  }
  CHECK(plant.solve(c.travel).contact);
}

TEST_CASE("finger: full tension gives a few newtons at the tip; gain varies with pose") {
  const FingerPlant plant(PlantConfig{}.noise_free());
  double p = 0.0;
  while (plant.solve(p).tension < 30.0) p += 0.01;
  const double f = plant.solve(p).force;
  CHECK(f > 4.0);
  CHECK(f < 6.0);
  const auto& c = plant.config();
  CHECK(plant.pose_gain({c.reference_flexion / 2, c.reference_flexion / 2}) == doctest::Approx(c.fingertip_gain));
  CHECK(plant.pose_gain({1.0, 1.0}) == doctest::Approx(c.fingertip_gain * (1.0 + c.gain_pose_slope * (2.0 - c.reference_flexion))));
}

TEST_CASE("finger without sensor never produces force") {
  PlantConfig c = PlantConfig{}.noise_free();
  c.contact_excursion = 0.0;
  const FingerPlant plant(c);
  for (double p = 0.0; p <= c.travel; p += 0.5) CHECK(plant.solve(p).force == 0.0);
}

TEST_CASE("actuator integration saturates speed and travel") {
  FingerPlant plant(PlantConfig{}.noise_free());
  auto obs = plant.step(100.0, 0.02);
  CHECK(obs.position == doctest::Approx(0.2));  // 10 mm/s max
  for (int i = 0; i < 200; ++i) obs = plant.step(10.0, 0.02);
  CHECK(obs.position == plant.config().travel);
  for (int i = 0; i < 300; ++i) obs = plant.step(-10.0, 0.02);
  CHECK(obs.position == 0.0);
  CHECK(obs.tension == 0.0);
  CHECK_THROWS_AS(plant.step(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("noise-free observation equals the state; noisy one stays physical") {
  FingerPlant clean(PlantConfig{}.noise_free(), 1);
  clean.set_position(12.0);
  const auto o = clean.observe();
  CHECK(o.tension == o.tension_true);
  CHECK(o.force == o.force_true);
  FingerPlant noisy(PlantConfig{}, 2);
  for (int i = 0; i < 500; ++i) {
    const auto n = noisy.step(i < 250 ? 6.0 : -6.0, 0.02);
    CHECK(n.tension >= 0.0);
    CHECK(n.force >= 0.0);
    CHECK(n.tension <= 30.0);
    // The load cell saturates at the top of its range.
    if (n.tension_true < 29.9) CHECK(std::abs(n.tension - n.tension_true) < 0.1);
  }
}

TEST_CASE("tension quantization is 12 bits over 0..30 N") {
  const double lsb = 30.0 / 4095.0;
  CHECK(quantize_tension(0.0) == 0.0);
  CHECK(quantize_tension(lsb * 0.49) == 0.0);
  CHECK(quantize_tension(lsb * 0.51) == doctest::Approx(lsb));
  CHECK(quantize_tension(31.0) == doctest::Approx(30.0));
  CHECK(quantize_tension(-1.0) == 0.0);
}

TEST_CASE("plant config JSON round trip and validation") {
  PlantConfig c;
  c.travel = 17.5;
  c.gain_pose_slope = -0.1;
  const auto back = plant_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  c.tendon_stiffness = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("subject force law") {
  SubjectParams s;
  CHECK(subject_force(s, 0.0) == 0.0);
  CHECK(subject_force(s, 1.0) == doctest::Approx(s.force_max));
  const double a = 0.4;
  CHECK(subject_force(s, a) == doctest::Approx(s.force_max * std::expm1(s.gamma * a) / std::expm1(s.gamma)));
  double last = 0.0;
  for (double x = 0.01; x <= 1.0; x += 0.01) {
    const double f = subject_force(s, x);
    CHECK(f > last);
    last = f;
    CHECK(activation_for_force(s, f) == doctest::Approx(x).epsilon(1e-9));
  }
  CHECK(activation_for_force(s, -1.0) == 0.0);
  CHECK(activation_for_force(s, 100.0) == 1.0);
  CHECK_THROWS_AS(subject_force(s, 1.1), std::invalid_argument);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto p = SubjectParams::sample(seed);
    CHECK_NOTHROW(p.validate());
    CHECK(p.gamma >= 1.8);
    CHECK(p.gamma <= 3.2);
    CHECK(to_json(subject_params_from_json(to_json(p))) == to_json(p));
  }
}

TEST_CASE("EMG generator amplitude follows the activation") {
  SubjectParams s;
  s.interference = 0.0;
  for (double a : {0.1, 0.5, 0.9}) {
    EmgGenerator gen(s, 2000.0, 3);
    double ss0 = 0.0, ss1 = 0.0;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
      const auto f = gen.next(a);
      ss0 += f.channels[0] * f.channels[0];
      ss1 += f.channels[1] * f.channels[1];
    }
    const double rms0 = std::sqrt(ss0 / n);
    CHECK(rms0 == doctest::Approx(emg_amplitude(s, a)).epsilon(0.05));
    CHECK(std::sqrt(ss1 / n) < rms0);
  }
  EmgGenerator a(s, 2000.0, 9), b(s, 2000.0, 9);
  for (int i = 0; i < 100; ++i) CHECK(a.next(0.3).channels == b.next(0.3).channels);
  CHECK_THROWS_AS(a.next(1.2), std::invalid_argument);
}

TEST_CASE("scripted activation lags toward the target and stays in range") {
  SubjectParams s;
  ScriptedActivation::Params p;
  p.jitter = 0.0;
  ScriptedActivation human(s, p, 4);
  const double goal = activation_for_force(s, 4.0);
  double a = 0.0;
  for (int i = 0; i < 15; ++i) a = human.step(4.0, 0.02);  // one time constant
  CHECK(a == doctest::Approx(goal * (1.0 - std::exp(-1.0))).epsilon(0.03));
  for (int i = 0; i < 500; ++i) a = human.step(4.0, 0.02);
  CHECK(a == doctest::Approx(goal).epsilon(1e-6));
  ScriptedActivation noisy(s, ScriptedActivation::Params{}, 5);
  for (int i = 0; i < 5000; ++i) {
    const double v = noisy.step(i % 500 < 250 ? 7.9 : 0.0, 0.02);
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
  }
}

TEST_CASE("force pattern levels, holds and repeats") {
  const auto pat = pattern_generate(8.0, 250.0, 5.0, 42);
  CHECK(pat.duration() == 250.0);
  REQUIRE(pat.segments().size() == 50);
  std::set<double> seen;
  for (std::size_t i = 0; i < pat.segments().size(); ++i) {
    const auto& seg = pat.segments()[i];
    CHECK(seg.start == doctest::Approx(5.0 * static_cast<double>(i)));
    seen.insert(seg.level);
    if (i > 0) CHECK(seg.level != pat.segments()[i - 1].level);
    CHECK(pat.value_at(seg.start + 2.5) == seg.level);
  }
  CHECK(seen == std::set<double>{2.0, 4.0, 4.8});
  CHECK(pat.value_at(-0.1) == 0.0);
  CHECK(pat.value_at(250.0) == 0.0);
  const auto same = pattern_generate(8.0, 250.0, 5.0, 42);
  for (std::size_t i = 0; i < 50; ++i) CHECK(same.segments()[i].level == pat.segments()[i].level);
}
