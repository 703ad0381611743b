#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "stq/cz.hpp"
#include "stq/errors.hpp"
#include "support.hpp"

using namespace stq;

namespace {

const CZCalibration& calibration(const QubitPair& pair) {
    static std::map<std::string, CZCalibration> cache;
    const auto key = pair.a + pair.b;
    if (!cache.contains(key)) {
        const auto& device = testing::paper_like();
        cache.emplace(key, calibrate_cz(device, pair, cz_coupler_flux(device, pair)));
    }
    return cache.at(key);
}

// Unitary-overlap oracle (|Tr(U^dagger M)|^2 + d) / (d (d + 1)); leakage is
// reported separately, so the norm loss of M does not enter.
double overlap_fidelity(const Eigen::Matrix4cd& m, const Eigen::Matrix4cd& u) {
    return (std::norm((u.adjoint() * m).trace()) + 4.0) / 20.0;
}

double wrapped_distance(double a, double b) {
    return std::abs(std::remainder(a - b, 2.0 * std::numbers::pi));
}

std::vector<double> time_grid(double stop, double step) {
    std::vector<double> t;
    for (double x = 0.0; x <= stop; x += step) {
        t.push_back(x);
    }
    return t;
}

}  // namespace

TEST_SUITE("cz") {

TEST_CASE("transfer planning on straddling pairs") {
    const auto& device = testing::paper_like();
    const auto plan = plan_transfer(device, {"Q3", "Q7"});
    CHECK(plan.mobile == "Q3");
    CHECK(plan.doubled == "Q7");
    CHECK(plan.target_frequency_ghz == doctest::Approx(4.25 - 0.22));
    const auto resonance = transfer_resonance(device, plan, cz_coupler_flux(device, {"Q3", "Q7"}));
    CHECK(resonance.g_eff_mhz == doctest::Approx(1.4).epsilon(1e-3));
    CHECK(resonance.lambda_mhz == doctest::Approx(std::sqrt(2.0) * resonance.g_eff_mhz));
}

TEST_CASE("calibrated gates on both pair types") {
    const auto& device = testing::paper_like();
    for (const QubitPair pair : {QubitPair{"Q3", "Q7"}, QubitPair{"Q2", "Q3"}}) {
        const auto& cal = calibration(pair);
        CHECK(wrapped_distance(cal.conditional_phase, std::numbers::pi) < 0.01);
        CHECK(cal.leakage < 1e-3);
        const auto m = cz_gate_matrix(device, cal);
        const auto fid = gate_fidelity(device, cal, {});
        CHECK(fid.average_fidelity > 0.999);
        CHECK(std::abs(fid.average_fidelity - overlap_fidelity(m, ideal_cz())) < 1e-8);
    }
}

TEST_CASE("calibration is idempotent and serializes") {
    const auto& device = testing::paper_like();
    const auto& cal = calibration({"Q3", "Q7"});
    const auto again = calibrate_cz(device, {"Q3", "Q7"}, cal.coupler_flux);
    CHECK(again.duration_ns == doctest::Approx(cal.duration_ns).epsilon(1e-9));
    CHECK(again.mobile_flux == doctest::Approx(cal.mobile_flux).epsilon(1e-9));
    const auto restored = CZCalibration::from_json(cal.to_json());
    CHECK(restored.to_json() == cal.to_json());
    CHECK_THROWS_AS(CZCalibration::from_json(nlohmann::json{{"pair", {"Q3"}}}), InputError);
}

TEST_CASE("process fidelity of a known mismatch") {
    TwoQubitProcess identity;
    identity.superoperator.setIdentity();
    const auto fid = process_fidelity(identity, ideal_cz());
    CHECK(fid.process_fidelity == doctest::Approx(0.25));
    CHECK(fid.average_fidelity == doctest::Approx(0.4));
}

TEST_CASE("serial and parallel processes agree") {
    const auto& device = testing::paper_like();
    const auto& cal = calibration({"Q3", "Q7"});
    const auto noise = NoiseSpec::uniform({"Q3", "Q7"}, 20.0);
    const auto a = cz_process(device, cal, noise, {}, Execution::serial);
    const auto b = cz_process(device, cal, noise, {}, Execution::parallel);
    CHECK((a.superoperator - b.superoperator).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("relaxation-limited fidelity matches the first-order estimate") {
    const auto& device = testing::paper_like();
    const auto& cal = calibration({"Q3", "Q7"});
    const auto noise = NoiseSpec::uniform({"Q3", "Q7"}, 20.0);
    const double noiseless = gate_fidelity(device, cal, {}).average_fidelity;
    const double noisy = gate_fidelity(device, cal, noise).average_fidelity;
    const double estimate = coherence_limited_fidelity(device, cal, noise);
    CHECK(noisy < noiseless);
    CHECK((1.0 - noisy) == doctest::Approx(1.0 - estimate).epsilon(0.1));
}

TEST_CASE("wrong-pair calibrations are rejected") {
    const auto& device = testing::paper_like();
    auto cal = calibration({"Q3", "Q7"});
    cal.pair = {"Q2", "Q3"};
    CHECK_THROWS_AS(cz_gate_matrix(device, cal), InputError);
}

TEST_CASE("vanishing couplings leave no transfer") {
    const auto& base = testing::paper_like();
    auto edges = base.couplings();
    for (auto& e : edges) {
        e.g0_ghz = 0.0;
    }
    const auto device = base.with_couplings(edges);
    CHECK_THROWS_AS(calibrate_cz(device, {"Q3", "Q7"}, 0.1), PhysicsError);
}

TEST_CASE("chevron peak times and heights follow the two-level oracle") {
    const auto& device = testing::paper_like();
    const QubitPair pair{"Q3", "Q7"};
    const double flux = cz_coupler_flux(device, pair);
    const double lambda = transfer_resonance(device, plan_transfer(device, pair), flux).lambda_mhz;
    const double t_peak = 1e3 / (4.0 * lambda);  // pi / (2 sqrt(2) g_eff)
    const double delta = 4.0 * lambda;  // 2 (2 sqrt(2) g_eff)
    const auto times = time_grid(1.5 * t_peak, 0.05);
    const auto map = chevron_scan(device, pair, {-delta, 0.0, delta}, times, flux);

    std::size_t best = 0;
    for (std::size_t j = 0; j < times.size(); ++j) {
        if (map.at(1, j) > map.at(1, best)) {
            best = j;
        }
    }
    CHECK(times[best] == doctest::Approx(t_peak).epsilon(0.02));
    CHECK(map.at(1, best) > 0.98);

    // Two-level Rabi maximum: Omega^2 / (Omega^2 + delta^2), Omega = 2 lambda.
    const double oracle = 4.0 * lambda * lambda / (4.0 * lambda * lambda + delta * delta);
    for (std::size_t i : {0, 2}) {
        double peak = 0.0;
        for (std::size_t j = 0; j < times.size(); ++j) {
            peak = std::max(peak, map.at(i, j));
        }
        CHECK(std::abs(peak - oracle) < 0.05);
    }
}

TEST_CASE("chevron without couplings stays empty") {
    const auto& base = testing::paper_like();
    auto edges = base.couplings();
    for (auto& e : edges) {
        if (e.touches("C_37") || (e.touches("Q3") && e.touches("Q7"))) {
            e.g0_ghz = 1e-9;
        }
    }
    const auto device = base.with_couplings(edges);
    const QubitPair pair{"Q3", "Q7"};
    const auto map = chevron_scan(testing::paper_like(), pair, {0.0}, {0.0}, 0.1);
    CHECK(map.at(0, 0) < 1e-3);
    const auto plan = plan_transfer(device, pair);
    (void)plan;
    std::vector<double> detunings;
    for (int k = -10; k <= 10; ++k) {
        detunings.push_back(1.0 * k);
    }
    const auto off = chevron_scan(device, pair, detunings, time_grid(500.0, 5.0), 0.1);
    CHECK(*std::max_element(off.population.begin(), off.population.end()) < 0.02);
}

TEST_CASE("chevron inputs") {
    const auto& device = testing::paper_like();
    CHECK_THROWS_AS(chevron_scan(device, {"Q3", "Q7"}, {}, {1.0}, 0.1), InputError);
    CHECK_THROWS_AS(chevron_scan(device, {"Q3", "Q7"}, {0.0}, {-1.0}, 0.1), InputError);
    CHECK_THROWS_AS(chevron_scan(device, {"Q3", "Q7"}, {1e5}, {1.0}, 0.1), InputError);
}

}
