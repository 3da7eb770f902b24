#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <vector>

#include "cfcw/tx_design.hpp"

using namespace cfcw;

namespace {

// Instantaneous frequency via the analytic-signal phase derivative. The
// quadrature component comes from a 4-sample delay of a second synthesis at
// the same parameters shifted by a quarter cycle; instead we use the simple
// central-difference of unwrapped arctan phase on a Hilbert-free IQ estimate:
// for a locally pure tone, f(t) ~ (x[n-1]*x'[n] products). To stay oracle-
// independent of the synthesizer we estimate frequency from zero-crossing-free
// phase of the pair (x[n], x[n+1]) assuming a slowly varying sinusoid:
//   cos w = (x[n-1] + x[n+1]) / (2 x[n])
// which is exact for any pure sinusoid regardless of amplitude and phase.
double local_frequency(const std::vector<double>& x, std::size_t n, double fs) {
    double c = (x[n - 1] + x[n + 1]) / (2.0 * x[n]);
    return std::acos(std::clamp(c, -1.0, 1.0)) * fs / kTwoPi;
}

}  // namespace

TEST_CASE("hop schedule pins the published tone plan") {
    auto s = build_hop_schedule(7000.0, 40000.0, 2000.0, 0.003, 0.012);
    REQUIRE(s.slots.size() == 4);
    CHECK(s.slots[0].f_primary == doctest::Approx(40000.0));
    CHECK(s.slots[0].f_secondary == doctest::Approx(33000.0));
    CHECK(s.slots[1].f_primary == doctest::Approx(42000.0));
    CHECK(s.slots[1].f_secondary == doctest::Approx(35000.0));
    CHECK(s.slots[2].f_primary == doctest::Approx(40000.0));
    CHECK(s.slots[3].f_primary == doctest::Approx(42000.0));
    CHECK(s.receive_frequency == doctest::Approx(7000.0));
    CHECK_NOTHROW(s.validate());

    auto one = build_hop_schedule(7000.0, 40000.0, 2000.0, 0.003, 0.003);
    REQUIRE(one.slots.size() == 1);
    CHECK(one.slots[0].f_primary == doctest::Approx(40000.0));
    CHECK(one.slots[0].f_secondary == doctest::Approx(33000.0));

    auto high = build_hop_schedule(7000.0, 80000.0, 2000.0, 0.003, 0.006);
    REQUIRE(high.slots.size() == 2);
    CHECK(high.slots[0].f_primary == doctest::Approx(80000.0));
    CHECK(high.slots[0].f_secondary == doctest::Approx(73000.0));
    CHECK(high.slots[1].f_primary == doctest::Approx(82000.0));
    CHECK(high.slots[1].f_secondary == doctest::Approx(75000.0));
}

TEST_CASE("schedule invariants are enforced") {
    // difference must stay below capture Nyquist
    CHECK_THROWS_AS(build_hop_schedule(9000.0, 40000.0, 2000.0, 0.003, 0.012), Error);
    // primary must sit in the nonlinearity regime (>= 25 kHz)
    CHECK_THROWS_AS(build_hop_schedule(7000.0, 20000.0, 2000.0, 0.003, 0.012), Error);
    CHECK_THROWS_AS(build_hop_schedule(-7000.0, 40000.0, 2000.0, 0.003, 0.012), Error);
    CHECK_THROWS_AS(build_hop_schedule(7000.0, 40000.0, 0.0, 0.003, 0.012), Error);

    auto s = build_hop_schedule(7000.0, 40000.0, 2000.0, 0.003, 0.012);
    for (const auto& slot : s.slots)
        CHECK(slot.f_primary - slot.f_secondary == doctest::Approx(7000.0));

    // constant schedule never hops; validate(require_hopping) rejects it
    auto c = build_constant_schedule(7000.0, 40000.0, 0.003, 0.012);
    for (const auto& slot : c.slots) CHECK(slot.f_primary == doctest::Approx(40000.0));
    CHECK_NOTHROW(c.validate());
    CHECK_THROWS_AS(c.validate(16000.0, true), Error);
}

TEST_CASE("direct schedule needs whole cycles per slot") {
    auto d = build_direct_schedule(20000.0, 2000.0, 0.003, 0.012, 48000.0);
    CHECK(d.kind == ScheduleKind::direct);
    CHECK(d.slots[0].f_primary == doctest::Approx(20000.0));
    CHECK(d.slots[0].f_secondary == doctest::Approx(0.0));
    CHECK(d.slots[1].f_primary == doctest::Approx(22000.0));
    // hop_step * hop_period not an integer -> phase model would drift
    CHECK_THROWS_AS(build_direct_schedule(20000.0, 2100.0, 0.003, 0.012, 48000.0), Error);
}

TEST_CASE("synthesis produces pure tones of the scheduled length") {
    auto s = build_hop_schedule(7000.0, 40000.0, 2000.0, 0.003, 0.003);
    auto tx = synthesize_transmit(s, 192000.0);
    REQUIRE(tx.primary_samples.size() == 576);
    REQUIRE(tx.secondary_samples.size() == 576);
    for (std::size_t n = 1; n + 1 < tx.primary_samples.size(); ++n) {
        if (std::abs(tx.primary_samples[n]) < 0.2) continue;  // skip zero crossings
        CHECK(local_frequency(tx.primary_samples, n, 192000.0) ==
              doctest::Approx(40000.0).epsilon(1e-6));
    }
    for (std::size_t n = 1; n + 1 < tx.secondary_samples.size(); ++n) {
        if (std::abs(tx.secondary_samples[n]) < 0.1) continue;
        CHECK(local_frequency(tx.secondary_samples, n, 192000.0) ==
              doctest::Approx(33000.0).epsilon(1e-6));
    }
}

TEST_CASE("instantaneous frequency follows the schedule away from hops") {
    auto s = build_hop_schedule(7000.0, 40000.0, 2000.0, 0.003, 0.012);
    auto tx = synthesize_transmit(s, 192000.0);
    const std::size_t slot_len = 576;
    for (std::size_t k = 0; k < s.slots.size(); ++k) {
        // sample mid-slot, away from the boundary
        for (std::size_t n = k * slot_len + 100; n < k * slot_len + 400; ++n) {
            if (std::abs(tx.primary_samples[n]) < 0.3) continue;
            CHECK(std::abs(local_frequency(tx.primary_samples, n, 192000.0) -
                           s.slots[k].f_primary) < 1.0);
            if (std::abs(tx.secondary_samples[n]) < 0.06) continue;
            CHECK(std::abs(local_frequency(tx.secondary_samples, n, 192000.0) -
                           s.slots[k].f_secondary) < 1.0);
        }
    }
}

TEST_CASE("phase is continuous across hop boundaries") {
    auto s = build_hop_schedule(7000.0, 40000.0, 2000.0, 0.003, 0.012);
    auto tx = synthesize_transmit(s, 192000.0);
    // no discontinuity clicks: the largest sample-to-sample step of a
    // phase-continuous 42 kHz tone at 192 kHz is 2*sin(pi*f/fs)
    double max_step = 2.0 * std::sin(kPi * 42000.0 / 192000.0);
    for (std::size_t n = 1; n < tx.primary_samples.size(); ++n)
        CHECK(std::abs(tx.primary_samples[n] - tx.primary_samples[n - 1]) <=
              max_step * 1.0001);
}

TEST_CASE("glided hops stay between the slot frequencies") {
    auto s = build_hop_schedule(7000.0, 40000.0, 2000.0, 0.003, 0.012);
    s.hop_ramp = 0.0012;
    auto tx = synthesize_transmit(s, 192000.0);
    for (std::size_t n = 600; n + 1 < tx.primary_samples.size(); ++n) {
        if (std::abs(tx.primary_samples[n]) < 0.3) continue;
        double f = local_frequency(tx.primary_samples, n, 192000.0);
        CHECK(f > 39999.0);
        CHECK(f < 42001.0);
    }
    // past the ramp, the slot frequency is held exactly
    std::size_t probe = 576 + 300;  // 1.56 ms into slot 1, after the 1.2 ms ramp
    while (std::abs(tx.primary_samples[probe]) < 0.3) ++probe;
    CHECK(local_frequency(tx.primary_samples, probe, 192000.0) ==
          doctest::Approx(42000.0).epsilon(1e-5));
    s.hop_ramp = 0.004;
    CHECK_THROWS_AS(synthesize_transmit(s, 192000.0), Error);
}

TEST_CASE("Nyquist boundary") {
    auto s = build_hop_schedule(7000.0, 100000.0, 2000.0, 0.003, 0.006);
    CHECK_THROWS_AS(synthesize_transmit(s, 192000.0), Error);  // 102 kHz > 96 kHz
    auto ok = build_hop_schedule(7000.0, 80000.0, 2000.0, 0.003, 0.006);
    CHECK_NOTHROW(synthesize_transmit(ok, 192000.0));
}
