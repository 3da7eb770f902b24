#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "cfcw/signal_core.hpp"

using namespace cfcw;

TEST_CASE("wrap_phase maps into [-pi, pi]") {
    CHECK(wrap_phase(0.0) == doctest::Approx(0.0));
    CHECK(wrap_phase(kTwoPi) == doctest::Approx(0.0));
    CHECK(wrap_phase(3.0 * kPi) == doctest::Approx(kPi));
    CHECK(wrap_phase(-3.0 * kPi) == doctest::Approx(kPi));
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int i = 0; i < 1000; ++i) {
        double phi = u(rng);
        double w = wrap_phase(phi);
        CHECK(w > -kPi - 1e-12);
        CHECK(w <= kPi + 1e-12);
        // same angle modulo 2*pi
        CHECK(std::remainder(phi - w, kTwoPi) == doctest::Approx(0.0).epsilon(1e-9));
    }
}

TEST_CASE("phase_to_distance_delta conversions") {
    CHECK(phase_to_distance_delta(0.0, 40000.0) == doctest::Approx(0.0));
    // one full cycle at 40 kHz is one wavelength, 8.575 mm in 343 m/s air
    CHECK(phase_to_distance_delta(kTwoPi, 40000.0) == doctest::Approx(0.008575));
    CHECK(phase_to_distance_delta(kPi, 80000.0) == doctest::Approx(0.0021438).epsilon(1e-4));
    // sign preserved: positive = moving away
    CHECK(phase_to_distance_delta(-kPi, 40000.0) < 0.0);
}

TEST_CASE("phase_to_distance_delta is linear in dphi and ~ 1/f") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> phi(-10.0, 10.0);
    std::uniform_real_distribution<double> freq(20000.0, 90000.0);
    for (int i = 0; i < 200; ++i) {
        double p = phi(rng), f = freq(rng);
        CHECK(phase_to_distance_delta(2.0 * p, f) ==
              doctest::Approx(2.0 * phase_to_distance_delta(p, f)));
        CHECK(phase_to_distance_delta(p, 2.0 * f) ==
              doctest::Approx(0.5 * phase_to_distance_delta(p, f)));
    }
}

TEST_CASE("phase_to_distance_delta rejects bad input") {
    CHECK_THROWS_AS(phase_to_distance_delta(1.0, 0.0), Error);
    CHECK_THROWS_AS(phase_to_distance_delta(1.0, -40000.0), Error);
    CHECK_THROWS_AS(
        phase_to_distance_delta(std::numeric_limits<double>::quiet_NaN(), 40000.0), Error);
    Medium bad;
    bad.speed_of_sound = 0.0;
    CHECK_THROWS_AS(phase_to_distance_delta(1.0, 40000.0, bad), Error);
    try {
        phase_to_distance_delta(1.0, -1.0);
        FAIL("no throw");
    } catch (const Error& e) {
        CHECK(e.kind() == "invalid-argument");
    }
}

TEST_CASE("max_unambiguous_speed matches the ranging geometry") {
    // 40 kHz primary, 3 ms frames: half a wavelength per frame classic,
    // a full wavelength with the velocity aid
    CHECK(max_unambiguous_speed(40000.0, 0.003) == doctest::Approx(1.4292).epsilon(1e-4));
    CHECK(max_unambiguous_speed(40000.0, 0.003, {}, true) ==
          doctest::Approx(2.8583).epsilon(1e-4));
    CHECK(max_unambiguous_speed(80000.0, 0.003) == doctest::Approx(0.71458).epsilon(1e-4));
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> freq(20000.0, 90000.0);
    std::uniform_real_distribution<double> period(0.001, 0.01);
    for (int i = 0; i < 100; ++i) {
        double f = freq(rng), tp = period(rng);
        CHECK(max_unambiguous_speed(f, tp, {}, true) ==
              doctest::Approx(2.0 * max_unambiguous_speed(f, tp)));
    }
    CHECK_THROWS_AS(max_unambiguous_speed(0.0, 0.003), Error);
    CHECK_THROWS_AS(max_unambiguous_speed(40000.0, 0.0), Error);
}

TEST_CASE("interference_error_bound closed forms") {
    auto zero = interference_error_bound(0.0, 40000.0);
    CHECK(zero.phase == doctest::Approx(0.0));
    CHECK(zero.distance == doctest::Approx(0.0));

    auto full = interference_error_bound(1.0, 40000.0);
    CHECK(full.phase == doctest::Approx(kPi / 2.0));
    CHECK(full.distance == doctest::Approx(0.0021438).epsilon(1e-4));

    auto half = interference_error_bound(0.5, 40000.0);
    CHECK(half.phase == doctest::Approx(kPi / 6.0));
    CHECK(half.distance == doctest::Approx(0.00071458).epsilon(1e-4));
}

TEST_CASE("interference distance bound halves when frequency doubles") {
    std::mt19937 rng(19);
    std::uniform_real_distribution<double> ratio(0.0, 1.0);
    std::uniform_real_distribution<double> freq(25000.0, 45000.0);
    for (int i = 0; i < 100; ++i) {
        double r = ratio(rng), f = freq(rng);
        auto a = interference_error_bound(r, f);
        auto b = interference_error_bound(r, 2.0 * f);
        CHECK(b.distance == doctest::Approx(0.5 * a.distance));
        CHECK(b.phase == doctest::Approx(a.phase));
    }
    CHECK_THROWS_AS(interference_error_bound(1.5, 40000.0), Error);
    CHECK_THROWS_AS(interference_error_bound(-0.1, 40000.0), Error);
}

TEST_CASE("model validation") {
    NonlinearityModel nl;
    CHECK_NOTHROW(nl.validate());
    nl.quadratic_gain = 1.5;
    CHECK_THROWS_AS(nl.validate(), Error);
    nl.quadratic_gain = -0.1;
    CHECK_THROWS_AS(nl.validate(), Error);
    nl = {0.0, 0.0};
    CHECK_THROWS_AS(nl.validate(), Error);

    Vec3 zero{};
    CHECK_THROWS_AS(zero.normalized(), Error);
    Vec3 v{3.0, 0.0, 4.0};
    CHECK(v.norm() == doctest::Approx(5.0));
    CHECK(v.normalized().norm() == doctest::Approx(1.0));
    CHECK(distance({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}) == doctest::Approx(0.0));
}
