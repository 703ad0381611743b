#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace stq {

/// Physical single-qubit pulses: pi and pi/2 rotations about x and y.
enum class Pulse { X, Y, X2, mX2, Y2, mY2 };

Eigen::Matrix2cd pulse_unitary(Pulse pulse);

inline constexpr int single_qubit_clifford_count = 24;
inline constexpr int two_qubit_clifford_count = 11520;

/// The 24 single-qubit Cliffords as pulse lists in time order (index 0 is
/// the identity).
const std::vector<std::vector<Pulse>>& single_qubit_clifford_pulses();
const std::vector<Eigen::Matrix2cd>& single_qubit_cliffords();

/// Index of the single-qubit Clifford equal to `u` up to global phase, or -1.
int find_single_qubit_clifford(const Eigen::Matrix2cd& u);

/// One layer of a two-qubit circuit: local Cliffords on both qubits (first
/// qubit = most significant) or a CZ.
struct CliffordLayer {
    enum class Kind { local, cz };
    Kind kind = Kind::local;
    int a = 0;
    int b = 0;

    static CliffordLayer local(int a, int b) { return {Kind::local, a, b}; }
    static CliffordLayer cz() { return {Kind::cz, 0, 0}; }
};

/// Two-qubit Clifford in the coset form
///   class 0: a x b
///   class 1: (s x t) CZ (a x b)
///   class 2: (s x t) CZ (Y2 x -X2) CZ (a x b)
///   class 3: (I x Y2) CZ (Y2 x -Y2) CZ (-Y2 x Y2) CZ (a x b)
/// with a, b any single-qubit Clifford and s, t drawn from three-element
/// sets of rotations. Layers are listed in time order.
struct TwoQubitClifford {
    int cls = 0;
    int a = 0;
    int b = 0;
    int s = 0;
    int t = 0;

    [[nodiscard]] std::vector<CliffordLayer> layers() const;
    [[nodiscard]] Eigen::Matrix4cd unitary() const;
    [[nodiscard]] int cz_count() const { return cls; }
};

/// Number of elements per class: 576, 5184, 5184, 576.
inline constexpr std::array<int, 4> two_qubit_class_sizes{576, 5184, 5184, 576};

/// Uniform element: class weighted by its size, then uniform parameters.
TwoQubitClifford sample_two_qubit_clifford(std::mt19937_64& rng);

/// The element equal to `u` up to global phase, found by peeling off the
/// class prefix and factoring the remaining local layer. Throws
/// PhysicsError("not-clifford") when `u` is not a Clifford.
TwoQubitClifford find_two_qubit_clifford(const Eigen::Matrix4cd& u);

/// Every element, enumerated class by class (test oracle only).
std::vector<TwoQubitClifford> enumerate_two_qubit_cliffords();

/// Sequence of `length` uniform Cliffords plus the inverting element.
struct CliffordSequence {
    int qubits = 1;
    std::vector<int> single;                    // n = 1
    std::vector<TwoQubitClifford> two;          // n = 2
    int single_inverse = 0;
    TwoQubitClifford two_inverse;
};

/// Throws InputError("unsupported-arity") for n outside {1, 2} and
/// InputError("bad-length") for length < 1.
CliffordSequence sample_clifford_sequence(int qubits, int length, std::uint64_t seed);

/// |Tr(u^dagger v)| / d == 1 to `tolerance`.
bool equal_up_to_phase(const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& v,
                       double tolerance = 1e-9);

}  // namespace stq
