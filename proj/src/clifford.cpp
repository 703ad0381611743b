#include "stq/clifford.hpp"

#include <cmath>
#include <complex>

#include "stq/errors.hpp"

namespace stq {

namespace {

using Complex = std::complex<double>;
constexpr Complex I{0.0, 1.0};

Eigen::Matrix2cd pauli_x() {
    Eigen::Matrix2cd m;
    m << 0, 1, 1, 0;
    return m;
}

Eigen::Matrix2cd pauli_y() {
    Eigen::Matrix2cd m;
    m << 0, -I, I, 0;
    return m;
}

Eigen::Matrix2cd rotation(const Eigen::Matrix2cd& axis, double angle) {
    return std::cos(angle / 2) * Eigen::Matrix2cd::Identity() - I * std::sin(angle / 2) * axis;
}

Eigen::Matrix2cd compose(const std::vector<Pulse>& pulses) {
    Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
    for (const auto p : pulses) {
        u = pulse_unitary(p) * u;
    }
    return u;
}

Eigen::Matrix4cd kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    Eigen::Matrix4cd out;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
        }
    }
    return out;
}

Eigen::Matrix4cd cz_matrix() {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Identity();
    m(3, 3) = -1.0;
    return m;
}

// The three-element rotation sets of the coset form, as single-qubit
// Clifford indices.
struct CosetSets {
    std::array<int, 3> s1;
    std::array<int, 3> s1_y2;
    std::array<int, 3> s1_mx2;
};

const CosetSets& coset_sets() {
    static const CosetSets sets = [] {
        using P = Pulse;
        const std::array<std::vector<P>, 3> base{
            std::vector<P>{}, std::vector<P>{P::X2, P::Y2}, std::vector<P>{P::mY2, P::mX2}};
        CosetSets out{};
        for (std::size_t k = 0; k < 3; ++k) {
            const auto u = compose(base[k]);
            out.s1[k] = find_single_qubit_clifford(u);
            out.s1_y2[k] = find_single_qubit_clifford(pulse_unitary(P::Y2) * u);
            out.s1_mx2[k] = find_single_qubit_clifford(pulse_unitary(P::mX2) * u);
        }
        return out;
    }();
    return sets;
}

int index_of(Pulse p) {
    return find_single_qubit_clifford(pulse_unitary(p));
}

// Layers after the base local layer, in time order.
std::vector<CliffordLayer> prefix_layers(int cls, int s, int t) {
    const auto& sets = coset_sets();
    std::vector<CliffordLayer> out;
    switch (cls) {
        case 0:
            break;
        case 1:
            out = {CliffordLayer::cz(), CliffordLayer::local(sets.s1[s], sets.s1_y2[t])};
            break;
        case 2:
            out = {CliffordLayer::cz(),
                   CliffordLayer::local(index_of(Pulse::Y2), index_of(Pulse::mX2)),
                   CliffordLayer::cz(), CliffordLayer::local(sets.s1_y2[s], sets.s1_mx2[t])};
            break;
        case 3:
            out = {CliffordLayer::cz(),
                   CliffordLayer::local(index_of(Pulse::mY2), index_of(Pulse::Y2)),
                   CliffordLayer::cz(),
                   CliffordLayer::local(index_of(Pulse::Y2), index_of(Pulse::mY2)),
                   CliffordLayer::cz(), CliffordLayer::local(0, index_of(Pulse::Y2))};
            break;
        default:
            throw InputError("bad-class", "two-qubit Clifford class must be 0..3");
    }
    return out;
}

Eigen::Matrix4cd layers_unitary(const std::vector<CliffordLayer>& layers) {
    const auto& c1 = single_qubit_cliffords();
    Eigen::Matrix4cd u = Eigen::Matrix4cd::Identity();
    for (const auto& layer : layers) {
        if (layer.kind == CliffordLayer::Kind::cz) {
            u = cz_matrix() * u;
        } else {
            u = kron(c1[layer.a], c1[layer.b]) * u;
        }
    }
    return u;
}

// Factors v = A x B with A, B single-qubit Cliffords; false if impossible.
bool factor_local(const Eigen::Matrix4cd& v, int& a, int& b) {
    int bi = 0;
    int bj = 0;
    double best = -1.0;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const double n = v.block<2, 2>(2 * i, 2 * j).norm();
            if (n > best) {
                best = n;
                bi = i;
                bj = j;
            }
        }
    }
    if (best < 1e-6) {
        return false;
    }
    const Eigen::Matrix2cd block = v.block<2, 2>(2 * bi, 2 * bj) * (std::sqrt(2.0) / best);
    b = find_single_qubit_clifford(block);
    if (b < 0) {
        return false;
    }
    const auto& ub = single_qubit_cliffords()[b];
    Eigen::Matrix2cd ua;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            ua(i, j) = (ub.adjoint() * v.block<2, 2>(2 * i, 2 * j)).trace() / 2.0;
        }
    }
    if (!kron(ua, ub).isApprox(v, 1e-9)) {
        return false;
    }
    a = find_single_qubit_clifford(ua);
    return a >= 0;
}

}  // namespace

Eigen::Matrix2cd pulse_unitary(Pulse pulse) {
    switch (pulse) {
        case Pulse::X:
            return rotation(pauli_x(), M_PI);
        case Pulse::Y:
            return rotation(pauli_y(), M_PI);
        case Pulse::X2:
            return rotation(pauli_x(), M_PI / 2);
        case Pulse::mX2:
            return rotation(pauli_x(), -M_PI / 2);
        case Pulse::Y2:
            return rotation(pauli_y(), M_PI / 2);
        case Pulse::mY2:
            return rotation(pauli_y(), -M_PI / 2);
    }
    throw InputError("bad-pulse", "unknown pulse");
}

const std::vector<std::vector<Pulse>>& single_qubit_clifford_pulses() {
    using P = Pulse;
    static const std::vector<std::vector<Pulse>> table{
        {},
        {P::X},
        {P::Y},
        {P::Y, P::X},
        {P::X2, P::Y2},
        {P::X2, P::mY2},
        {P::mX2, P::Y2},
        {P::mX2, P::mY2},
        {P::Y2, P::X2},
        {P::Y2, P::mX2},
        {P::mY2, P::X2},
        {P::mY2, P::mX2},
        {P::X2},
        {P::mX2},
        {P::Y2},
        {P::mY2},
        {P::mX2, P::Y2, P::X2},
        {P::mX2, P::mY2, P::X2},
        {P::X, P::Y2},
        {P::X, P::mY2},
        {P::Y, P::X2},
        {P::Y, P::mX2},
        {P::X2, P::Y2, P::X2},
        {P::mX2, P::Y2, P::mX2},
    };
    return table;
}

const std::vector<Eigen::Matrix2cd>& single_qubit_cliffords() {
    static const std::vector<Eigen::Matrix2cd> table = [] {
        std::vector<Eigen::Matrix2cd> out;
        for (const auto& pulses : single_qubit_clifford_pulses()) {
            out.push_back(compose(pulses));
        }
        return out;
    }();
    return table;
}

int find_single_qubit_clifford(const Eigen::Matrix2cd& u) {
    const auto& table = single_qubit_cliffords();
    for (int k = 0; k < single_qubit_clifford_count; ++k) {
        if (equal_up_to_phase(table[k], u)) {
            return k;
        }
    }
    return -1;
}

std::vector<CliffordLayer> TwoQubitClifford::layers() const {
    std::vector<CliffordLayer> out{CliffordLayer::local(a, b)};
    const auto rest = prefix_layers(cls, s, t);
    out.insert(out.end(), rest.begin(), rest.end());
    return out;
}

Eigen::Matrix4cd TwoQubitClifford::unitary() const {
    return layers_unitary(layers());
}

TwoQubitClifford sample_two_qubit_clifford(std::mt19937_64& rng) {
    std::discrete_distribution<int> cls(two_qubit_class_sizes.begin(), two_qubit_class_sizes.end());
    std::uniform_int_distribution<int> c1(0, single_qubit_clifford_count - 1);
    std::uniform_int_distribution<int> three(0, 2);
    TwoQubitClifford out;
    out.cls = cls(rng);
    out.a = c1(rng);
    out.b = c1(rng);
    if (out.cls == 1 || out.cls == 2) {
        out.s = three(rng);
        out.t = three(rng);
    }
    return out;
}

TwoQubitClifford find_two_qubit_clifford(const Eigen::Matrix4cd& u) {
    for (int cls = 0; cls < 4; ++cls) {
        const int choices = (cls == 1 || cls == 2) ? 3 : 1;
        for (int s = 0; s < choices; ++s) {
            for (int t = 0; t < choices; ++t) {
                const Eigen::Matrix4cd base = layers_unitary(prefix_layers(cls, s, t)).adjoint() * u;
                int a = 0;
                int b = 0;
                if (factor_local(base, a, b)) {
                    return {cls, a, b, s, t};
                }
            }
        }
    }
    throw PhysicsError("not-clifford", "unitary is not a two-qubit Clifford");
}

std::vector<TwoQubitClifford> enumerate_two_qubit_cliffords() {
    std::vector<TwoQubitClifford> out;
    out.reserve(two_qubit_clifford_count);
    for (int cls = 0; cls < 4; ++cls) {
        const int choices = (cls == 1 || cls == 2) ? 3 : 1;
        for (int s = 0; s < choices; ++s) {
            for (int t = 0; t < choices; ++t) {
                for (int a = 0; a < single_qubit_clifford_count; ++a) {
                    for (int b = 0; b < single_qubit_clifford_count; ++b) {
                        out.push_back({cls, a, b, s, t});
                    }
                }
            }
        }
    }
    return out;
}

CliffordSequence sample_clifford_sequence(int qubits, int length, std::uint64_t seed) {
    if (qubits != 1 && qubits != 2) {
        throw InputError("unsupported-arity", "Clifford sequences support 1 or 2 qubits");
    }
    if (length < 1) {
        throw InputError("bad-length", "sequence length must be at least 1");
    }
    std::mt19937_64 rng(seed);
    CliffordSequence seq;
    seq.qubits = qubits;
    if (qubits == 1) {
        std::uniform_int_distribution<int> c1(0, single_qubit_clifford_count - 1);
        const auto& table = single_qubit_cliffords();
        Eigen::Matrix2cd total = Eigen::Matrix2cd::Identity();
        for (int k = 0; k < length; ++k) {
            seq.single.push_back(c1(rng));
            total = table[seq.single.back()] * total;
        }
        seq.single_inverse = find_single_qubit_clifford(total.adjoint());
    } else {
        Eigen::Matrix4cd total = Eigen::Matrix4cd::Identity();
        for (int k = 0; k < length; ++k) {
            seq.two.push_back(sample_two_qubit_clifford(rng));
            total = seq.two.back().unitary() * total;
        }
        seq.two_inverse = find_two_qubit_clifford(total.adjoint());
    }
    return seq;
}

bool equal_up_to_phase(const Eigen::MatrixXcd& u, const Eigen::MatrixXcd& v, double tolerance) {
    if (u.rows() != v.rows() || u.cols() != v.cols()) {
        return false;
    }
    const double d = static_cast<double>(u.rows());
    return std::abs(std::abs((u.adjoint() * v).trace()) / d - 1.0) < tolerance &&
           (u.adjoint() * u).isIdentity(1e-9) && (v.adjoint() * v).isIdentity(1e-9);
}

}  // namespace stq
