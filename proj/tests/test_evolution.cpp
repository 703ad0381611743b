#include <doctest.h>

#include <cmath>
#include <complex>

#include <unsupported/Eigen/MatrixFunctions>

#include "stq/errors.hpp"
#include "stq/evolution.hpp"
#include "support.hpp"

using namespace stq;
using Complex = std::complex<double>;

namespace {

// Two resonant modes coupled by a fixed exchange g (GHz).
DeviceSpec resonant_pair(double g_ghz, int levels) {
    std::vector<ModeSpec> modes{{"A", ModeKind::qubit, 5.0, -0.25, levels, true, 0.0},
                                {"B", ModeKind::qubit, 5.0, -0.25, levels, true, 0.0}};
    return DeviceSpec(modes, {{"A", "B", g_ghz, CouplingScaling::fixed}});
}

DeviceSpec single_mode() {
    return DeviceSpec({{"A", ModeKind::qubit, 5.0, -0.25, 3, true, 0.0}}, {});
}

// |rho_01| decay rate fitted over [0, T] by a log-linear least squares.
double coherence_rate(double t1_us, double tphi_us) {
    const auto device = single_mode();
    const ModeSubset subset(device, {"A"});
    Eigen::VectorXcd plus = Eigen::VectorXcd::Zero(3);
    plus(0) = plus(1) = 1.0 / std::sqrt(2.0);
    DensityState rho{subset, plus * plus.adjoint()};
    NoiseSpec noise;
    noise.t1_us["A"] = t1_us;
    noise.tphi_us["A"] = tphi_us;
    std::vector<double> t, y;
    const double step = 500.0;
    for (int k = 1; k <= 8; ++k) {
        FluxSchedule s(step);
        s.constant("A", 0.0, step, 0.0);
        rho = evolve_lindblad(device, s, noise, rho);
        t.push_back(step * k);
        y.push_back(std::log(2.0 * std::abs(rho.matrix(0, 1))));
    }
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        st += t[i];
        sy += y[i];
        stt += t[i] * t[i];
        sty += t[i] * y[i];
    }
    const double n = static_cast<double>(t.size());
    return -(n * sty - st * sy) / (n * stt - st * st);
}

}  // namespace

TEST_SUITE("evolution") {

TEST_CASE("hermitian exponential matches the matrix-function oracle") {
    const auto& device = testing::paper_like();
    const ModeSubset subset(device, {"Q2", "C_23", "Q3"});
    const auto h = build_hamiltonian(device, subset, {}).matrix;
    const Eigen::MatrixXcd oracle = (Complex(0.0, -0.37) * h).exp();
    CHECK((hermitian_exponential(h, 0.37) - oracle).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("free evolution accumulates the bare phase") {
    const auto device = single_mode();
    const ModeSubset subset(device, {"A"});
    QuantumState psi{subset, Eigen::VectorXcd::Zero(3)};
    psi.amplitudes(0) = psi.amplitudes(1) = 1.0 / std::sqrt(2.0);
    const double t = 3.3;
    FluxSchedule s(t);
    s.constant("A", 0.0, t, 0.0);
    const auto out = evolve_unitary(device, s, psi);
    const Complex ratio = out.amplitudes(1) / out.amplitudes(0);
    CHECK(std::arg(ratio) == doctest::Approx(std::remainder(-units::angular(5.0) * t, units::two_pi)).epsilon(1e-9));
    CHECK(std::abs(ratio) == doctest::Approx(1.0));
}

TEST_CASE("resonant exchange follows the two-level Rabi formula") {
    const double g = 0.004;
    const auto device = resonant_pair(g, 2);
    const ModeSubset subset(device, {"A", "B"});
    EvolutionOptions opts;
    opts.form = CouplingForm::rotating_wave;
    for (double t : {10.0, 31.25, 47.0}) {
        FluxSchedule s(t);
        s.constant("A", 0.0, t, 0.0);
        const auto out = evolve_unitary(device, s, QuantumState::basis(subset, {1, 0}), opts);
        const double p = std::norm(out.amplitudes(static_cast<Eigen::Index>(subset.index_of(Occupation{0, 1}))));
        CHECK(p == doctest::Approx(std::pow(std::sin(units::angular(g) * t), 2)).epsilon(1e-9));
    }
}

TEST_CASE("time-varying steps converge with dt") {
    const auto& device = testing::paper_like();
    const ModeSubset subset(device, {"Q3", "C_37", "Q7"});
    FluxSchedule s(20.0);
    s.flat_top("C_37", 0.0, 20.0, device.flux_of("C_37", {}), 0.1, 5.0);
    EvolutionOptions coarse, fine;
    coarse.dt = 0.02;
    fine.dt = 0.01;
    const auto psi = QuantumState::basis(subset, {1, 0, 1});
    const auto a = evolve_unitary(device, s, psi, coarse);
    const auto b = evolve_unitary(device, s, psi, fine);
    CHECK(std::abs(std::norm(a.amplitudes.dot(b.amplitudes)) - 1.0) < 1e-6);
}

TEST_CASE("coherence decays at 1/(2 T1) + 1/Tphi") {
    for (const auto [t1, tphi] : {std::pair{20.0, 10.0}, std::pair{15.0, 40.0}, std::pair{30.0, 25.0}}) {
        const double expected = 1e-3 * (1.0 / (2.0 * t1) + 1.0 / tphi);
        CHECK(coherence_rate(t1, tphi) == doctest::Approx(expected).epsilon(0.01));
    }
}

TEST_CASE("relaxation empties the excited state at 1/T1") {
    const auto device = single_mode();
    const ModeSubset subset(device, {"A"});
    const double t = 4000.0;
    FluxSchedule s(t);
    s.constant("A", 0.0, t, 0.0);
    const auto out = evolve_lindblad(device, s, NoiseSpec::uniform({"A"}, 20.0),
                                     DensityState::pure(QuantumState::basis(subset, {1})));
    CHECK(out.matrix(1, 1).real() == doctest::Approx(std::exp(-t / 20000.0)).epsilon(1e-4));
    CHECK(out.matrix.trace().real() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("noiseless Lindblad equals unitary evolution") {
    const auto& device = testing::paper_like();
    const ModeSubset subset(device, {"Q3", "C_37", "Q7"});
    FluxSchedule s(30.0);
    s.flat_top("Q3", 0.0, 30.0, 0.0, 0.05, 4.0);
    const auto psi = QuantumState::basis(subset, {1, 0, 1});
    const auto pure = evolve_unitary(device, s, psi);
    const auto mixed = evolve_lindblad(device, s, {}, DensityState::pure(psi));
    CHECK((mixed.matrix - pure.amplitudes * pure.amplitudes.adjoint()).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("input validation") {
    const auto device = single_mode();
    const ModeSubset subset(device, {"A"});
    FluxSchedule s(1.0);
    s.constant("B", 0.0, 1.0, 0.1);
    CHECK_THROWS_AS(evolve_lindblad(device, s, {}, DensityState::pure(QuantumState::basis(subset, {0}))), InputError);
    FluxSchedule ok(1.0);
    ok.constant("A", 0.0, 1.0, 0.0);
    NoiseSpec bad;
    bad.t1_us["A"] = -1.0;
    CHECK_THROWS_AS(evolve_lindblad(device, ok, bad, DensityState::pure(QuantumState::basis(subset, {0}))), InputError);
    EvolutionOptions zero;
    zero.dt = 0.0;
    CHECK_THROWS_AS(propagator(device, subset, ok, zero), InputError);
}

}
