#include <doctest.h>

#include <cmath>

#include <unsupported/Eigen/KroneckerProduct>

#include "stq/channel.hpp"
#include "stq/clifford.hpp"
#include "stq/errors.hpp"

using namespace stq;

TEST_SUITE("channel") {

TEST_CASE("vectorization convention") {
    const auto& u = single_qubit_cliffords()[7];
    Eigen::Matrix2cd rho;
    rho << 0.7, std::complex<double>(0.1, 0.2), std::complex<double>(0.1, -0.2), 0.3;
    const auto ch = unitary_channel("u", u);
    CHECK((ch.apply(rho) - u * rho * u.adjoint()).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((unvectorize(vectorize(rho), 2) - rho).cwiseAbs().maxCoeff() == 0.0);
    CHECK(ch.is_cptp());
}

TEST_CASE("depolarizing and damping channels") {
    const auto dep = depolarizing(1, 0.9);
    Eigen::Matrix2cd rho = Eigen::Matrix2cd::Zero();
    rho(0, 0) = 1.0;
    const auto out = dep.apply(rho);
    CHECK(out(0, 0).real() == doctest::Approx(0.95));
    CHECK(dep.is_cptp());
    CHECK(depolarizing(2, -1.0 / 15.0).is_cptp());
    CHECK_THROWS_AS(depolarizing(1, 1.1), InputError);
    CHECK_THROWS_AS(depolarizing(1, -0.5), InputError);

    const auto damp = amplitude_damping(0.2);
    Eigen::Matrix2cd one = Eigen::Matrix2cd::Zero();
    one(1, 1) = 1.0;
    CHECK(damp.apply(one)(0, 0).real() == doctest::Approx(0.2));
    CHECK(damp.is_cptp());
    CHECK_THROWS_AS(amplitude_damping(1.5), InputError);
}

TEST_CASE("tensor products follow the Kronecker layout") {
    const auto& a = single_qubit_cliffords()[3];
    const auto& b = single_qubit_cliffords()[17];
    const auto joint = tensor(unitary_channel("a", a), unitary_channel("b", b));
    const Eigen::Matrix4cd u = Eigen::kroneckerProduct(a, b);
    CHECK((joint.superoperator - unitary_superoperator(u)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(joint.qubits == 2);
    CHECK(equal_up_to_phase(joint.ideal, u));

    const auto mixed = tensor(depolarizing(1, 0.8), amplitude_damping(0.1));
    CHECK(mixed.is_cptp());
    const auto seq = then(unitary_channel("a", a), depolarizing(1, 0.5));
    CHECK(equal_up_to_phase(seq.ideal, a));
}

TEST_CASE("non-CPTP maps are rejected") {
    GateChannel bad = identity_channel(1);
    bad.superoperator *= 1.2;
    CHECK_FALSE(bad.is_tp());
    CHECK_THROWS_AS(require_cptp(bad), InputError);
    GateChannel leaky = identity_channel(1);
    leaky.superoperator *= 0.9;
    CHECK(leaky.is_tp(1e-9, true));
    CHECK_NOTHROW(require_cptp(leaky, 1e-9, true));
    GateChannel transpose = identity_channel(1);
    transpose.superoperator.setZero();
    transpose.superoperator(0, 0) = transpose.superoperator(3, 3) = 1.0;
    transpose.superoperator(1, 2) = transpose.superoperator(2, 1) = 1.0;
    CHECK(transpose.is_tp());
    CHECK_FALSE(transpose.is_cp());
}

}
