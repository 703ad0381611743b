#include <doctest.h>

#include <cmath>

#include "stq/errors.hpp"
#include "stq/statics.hpp"
#include "support.hpp"

using namespace stq;

namespace {

// zeta from the Kronecker oracle and a general eigensolver (MHz).
double oracle_zeta(const DeviceSpec& device, const std::vector<std::string>& ids, const FluxBias& bias) {
    const auto h = testing::kronecker_hamiltonian(device, ids, device.idle_bias().merged(bias));
    std::vector<int> levels;
    for (const auto& id : ids) {
        levels.push_back(device.mode(id).levels);
    }
    const auto energy = [&](int na, int nb) {
        std::vector<int> occ(ids.size(), 0);
        occ.front() = na;
        occ.back() = nb;
        return testing::reference_energy(h, testing::occupation_index(levels, occ));
    };
    return units::mhz(energy(1, 1) - energy(1, 0) - energy(0, 1) + energy(0, 0));
}

}  // namespace

TEST_SUITE("statics") {

TEST_CASE("zeta matches the eigensolver oracle") {
    const auto& device = testing::paper_like();
    for (double flux : {0.05, 0.19, 0.3}) {
        const double zeta = zz_shift_mhz(device, {"Q3", "Q7"}, flux);
        const double oracle = oracle_zeta(device, {"Q3", "C_37", "Q7"}, FluxBias{}.set("C_37", flux));
        CHECK(zeta == doctest::Approx(oracle).epsilon(1e-8));
    }
}

TEST_CASE("zeta scales as g^4 without a direct coupling") {
    const auto& base = testing::paper_like();
    std::vector<CouplingSpec> edges;
    for (auto c : base.couplings()) {
        if (!base.mode(c.a).is_coupler() && !base.mode(c.b).is_coupler()) {
            c.g0_ghz = 0.0;
        }
        edges.push_back(c);
    }
    const auto device = base.with_couplings(edges);
    const double z1 = zz_shift_mhz(device.with_scaled_couplings(0.2), {"Q2", "Q3"}, 0.0);
    const double z2 = zz_shift_mhz(device.with_scaled_couplings(0.4), {"Q2", "Q3"}, 0.0);
    CHECK(z2 / z1 == doctest::Approx(16.0).epsilon(0.03));
}

TEST_CASE("serial and parallel scans agree") {
    const auto& device = testing::paper_like();
    std::vector<double> grid;
    for (int k = 0; k <= 20; ++k) {
        grid.push_back(0.02 * k);
    }
    const auto serial = zz_scan(device, {"Q2", "Q3"}, grid, Execution::serial);
    const auto parallel = zz_scan(device, {"Q2", "Q3"}, grid, Execution::parallel);
    REQUIRE(serial.size() == grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        CHECK(serial[i].flux == parallel[i].flux);
        CHECK(serial[i].ambiguous == parallel[i].ambiguous);
        if (!serial[i].ambiguous) {
            CHECK(serial[i].zeta_mhz == parallel[i].zeta_mhz);
        }
    }
    const auto a = coupler_spectrum_scan(device, "C_23", grid, Execution::serial);
    const auto b = coupler_spectrum_scan(device, "C_23", grid, Execution::parallel);
    REQUIRE(a.samples.size() == b.samples.size());
    for (std::size_t i = 0; i < a.samples.size(); ++i) {
        CHECK(a.samples[i].frequency_ghz == b.samples[i].frequency_ghz);
        // Dispersive shift of a coupler far above both qubits stays small.
        CHECK(a.samples[i].frequency_ghz ==
              doctest::Approx(device.frequency_ghz("C_23", FluxBias{}.set("C_23", a.samples[i].flux))).epsilon(0.01));
    }
}

TEST_CASE("zero search lands on a zero of zeta") {
    const auto& device = testing::paper_like();
    const auto zero = find_zz_zero(device, {"Q3", "Q4"}, 0.2, 0.26);
    CHECK(std::abs(zero.zeta_mhz) < 1e-3);
    CHECK(zero.evaluations <= 100);
    CHECK(std::abs(zz_shift_mhz(device, {"Q3", "Q4"}, zero.flux)) < 1e-3);
    const auto swapped = find_zz_zero(device, {"Q4", "Q3"}, 0.2, 0.26);
    CHECK(swapped.flux == doctest::Approx(zero.flux).epsilon(1e-3));
}

TEST_CASE("zero search errors") {
    const auto& device = testing::paper_like();
    CHECK_THROWS_AS(find_zz_zero(device, {"Q3", "Q4"}, 0.3, 0.1), InputError);
    try {
        (void)find_zz_zero(device, {"Q3", "Q4"}, 0.0, 0.05);
        FAIL("expected no-sign-change");
    } catch (const PhysicsError& e) {
        CHECK(e.code() == "no-sign-change");
    }
    CHECK_THROWS_AS(zz_shift_mhz(device, {"Q1", "Q3"}, 0.1), InputError);
    CHECK_THROWS_AS(zz_shift_mhz(device, {"Q3", "Q3"}, 0.1), InputError);
}

TEST_CASE("effective coupling: methods and orientation agree") {
    const auto& device = testing::paper_like();
    const QubitPair pair{"Q3", "Q7"};
    for (double flux : {0.1, 0.2}) {
        const auto split = effective_coupling(device, pair, flux, CouplingMethod::splitting);
        EffectiveCouplingOptions at_resonance;
        at_resonance.bias.set("Q7", split.swept_flux);
        at_resonance.counter_rotating = true;
        const auto pert = effective_coupling(device, pair, flux, CouplingMethod::perturbative, at_resonance);
        CHECK(split.g_mhz == doctest::Approx(pert.g_mhz).epsilon(0.05));

        EffectiveCouplingOptions a_swept;
        a_swept.swept = "Q7";
        const auto swapped = effective_coupling(device, pair.swapped(), flux, CouplingMethod::splitting, a_swept);
        CHECK(swapped.g_mhz == doctest::Approx(split.g_mhz).epsilon(1e-6));
    }
    const double idle = device.flux_of("C_37", {});
    const auto near_zero = effective_coupling(device, pair, idle, CouplingMethod::splitting);
    CHECK(std::abs(near_zero.g_mhz) < 0.5);
}

TEST_CASE("coupler flux for a target coupling") {
    const auto& device = testing::paper_like();
    const double flux = coupler_flux_for_coupling(device, {"Q3", "Q7"}, -2.0, 0.1);
    const auto check = effective_coupling(device, {"Q3", "Q7"}, flux, CouplingMethod::splitting);
    CHECK(check.g_mhz == doctest::Approx(-2.0).epsilon(0.01));
}

}
