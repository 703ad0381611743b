#pragma once

#include <string>

#include <Eigen/Dense>

namespace stq {

/// Quantum channel on n qubits as a d^2 x d^2 superoperator acting on
/// row-major vectorized density matrices: vec(U rho U^dagger) = (U x U*) vec(rho).
/// `ideal` is the intended unitary, used to compute RB inverses.
struct GateChannel {
    std::string label;
    int qubits = 1;
    Eigen::MatrixXcd ideal;
    Eigen::MatrixXcd superoperator;

    [[nodiscard]] int dimension() const { return 1 << qubits; }
    [[nodiscard]] Eigen::MatrixXcd apply(const Eigen::MatrixXcd& rho) const;
    /// Choi matrix, normalized to unit trace.
    [[nodiscard]] Eigen::MatrixXcd choi() const;
    /// Choi eigenvalues >= -tolerance.
    [[nodiscard]] bool is_cp(double tolerance = 1e-9) const;
    /// Tr(S(E_kl)) = delta_kl, or with `nonincreasing` only Tr(S(rho)) <= Tr(rho)
    /// (channels that lose population to leakage).
    [[nodiscard]] bool is_tp(double tolerance = 1e-9, bool nonincreasing = false) const;
    [[nodiscard]] bool is_cptp(double tolerance = 1e-9) const { return is_cp(tolerance) && is_tp(tolerance); }
};

Eigen::MatrixXcd unitary_superoperator(const Eigen::MatrixXcd& u);
Eigen::MatrixXcd vectorize(const Eigen::MatrixXcd& rho);
Eigen::MatrixXcd unvectorize(const Eigen::MatrixXcd& v, int dimension);

GateChannel unitary_channel(const std::string& label, const Eigen::MatrixXcd& u);
GateChannel identity_channel(int qubits);

/// rho -> p rho + (1 - p) Tr(rho) I / d, on all qubits at once.
/// Throws InputError("bad-depolarizing") unless -1/(d^2-1) <= p <= 1.
GateChannel depolarizing(int qubits, double p);

/// Single-qubit amplitude damping with decay probability gamma in [0, 1].
GateChannel amplitude_damping(double gamma);

/// a x b on disjoint qubits (a on the most significant qubits).
GateChannel tensor(const GateChannel& a, const GateChannel& b);

/// `second` after `first`; the ideal unitaries compose the same way.
GateChannel then(const GateChannel& first, const GateChannel& second);

/// Throws InputError("not-cptp") naming the channel when the check fails.
/// `leaky` accepts trace-decreasing channels.
void require_cptp(const GateChannel& channel, double tolerance = 1e-9, bool leaky = false);

}  // namespace stq
