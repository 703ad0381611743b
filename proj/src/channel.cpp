#include "stq/channel.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include "stq/errors.hpp"

namespace stq {

Eigen::MatrixXcd vectorize(const Eigen::MatrixXcd& rho) {
    Eigen::MatrixXcd v(rho.size(), 1);
    for (Eigen::Index i = 0; i < rho.rows(); ++i) {
        for (Eigen::Index j = 0; j < rho.cols(); ++j) {
            v(i * rho.cols() + j, 0) = rho(i, j);
        }
    }
    return v;
}

Eigen::MatrixXcd unvectorize(const Eigen::MatrixXcd& v, int dimension) {
    Eigen::MatrixXcd rho(dimension, dimension);
    for (int i = 0; i < dimension; ++i) {
        for (int j = 0; j < dimension; ++j) {
            rho(i, j) = v(i * dimension + j, 0);
        }
    }
    return rho;
}

Eigen::MatrixXcd unitary_superoperator(const Eigen::MatrixXcd& u) {
    return Eigen::kroneckerProduct(u, u.conjugate()).eval();
}

Eigen::MatrixXcd GateChannel::apply(const Eigen::MatrixXcd& rho) const {
    return unvectorize(superoperator * vectorize(rho), dimension());
}

Eigen::MatrixXcd GateChannel::choi() const {
    // J[(i,k),(j,l)] = sum over E_{kl} input: (S E_kl)(i,j) / d.
    const int d = dimension();
    Eigen::MatrixXcd j = Eigen::MatrixXcd::Zero(d * d, d * d);
    for (int k = 0; k < d; ++k) {
        for (int l = 0; l < d; ++l) {
            Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(d, d);
            e(k, l) = 1.0;
            const auto out = apply(e);
            for (int a = 0; a < d; ++a) {
                for (int b = 0; b < d; ++b) {
                    j(a * d + k, b * d + l) = out(a, b) / static_cast<double>(d);
                }
            }
        }
    }
    return j;
}

bool GateChannel::is_cp(double tolerance) const {
    const int d = dimension();
    if (superoperator.rows() != d * d || superoperator.cols() != d * d) {
        return false;
    }
    const Eigen::MatrixXcd j = choi();
    const Eigen::MatrixXcd h = 0.5 * (j + j.adjoint());
    if ((j - h).cwiseAbs().maxCoeff() > tolerance) {
        return false;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff() >= -tolerance;
}

bool GateChannel::is_tp(double tolerance, bool nonincreasing) const {
    const int d = dimension();
    if (superoperator.rows() != d * d || superoperator.cols() != d * d) {
        return false;
    }
    // m(k, l) = Tr(S(E_kl)); TP means m = I, trace non-increasing m <= I.
    Eigen::MatrixXcd m(d, d);
    for (int k = 0; k < d; ++k) {
        for (int l = 0; l < d; ++l) {
            Eigen::MatrixXcd e = Eigen::MatrixXcd::Zero(d, d);
            e(k, l) = 1.0;
            m(k, l) = apply(e).trace();
        }
    }
    const Eigen::MatrixXcd defect = Eigen::MatrixXcd::Identity(d, d) - m;
    if (!nonincreasing) {
        return defect.cwiseAbs().maxCoeff() <= tolerance;
    }
    const Eigen::MatrixXcd h = 0.5 * (defect + defect.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff() >= -tolerance;
}

GateChannel unitary_channel(const std::string& label, const Eigen::MatrixXcd& u) {
    int qubits = 0;
    while ((1 << qubits) < u.rows()) {
        ++qubits;
    }
    if ((1 << qubits) != u.rows() || u.rows() != u.cols()) {
        throw InputError("bad-dimension", "gate " + label + " is not a square qubit operator");
    }
    return {label, qubits, u, unitary_superoperator(u)};
}

GateChannel identity_channel(int qubits) {
    return unitary_channel("I", Eigen::MatrixXcd::Identity(1 << qubits, 1 << qubits));
}

GateChannel depolarizing(int qubits, double p) {
    const int d = 1 << qubits;
    const double lower = -1.0 / (d * d - 1.0);
    if (!(p >= lower && p <= 1.0)) {
        throw InputError("bad-depolarizing", "depolarizing parameter " + std::to_string(p) +
                                                 " outside [" + std::to_string(lower) + ", 1]");
    }
    GateChannel out = identity_channel(qubits);
    out.label = "depolarizing";
    const Eigen::MatrixXcd id = vectorize(Eigen::MatrixXcd::Identity(d, d));
    out.superoperator = p * Eigen::MatrixXcd::Identity(d * d, d * d) +
                        (1.0 - p) / d * id * id.adjoint();
    return out;
}

GateChannel amplitude_damping(double gamma) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw InputError("bad-damping", "amplitude damping probability outside [0, 1]");
    }
    Eigen::Matrix2cd k0;
    k0 << 1, 0, 0, std::sqrt(1.0 - gamma);
    Eigen::Matrix2cd k1;
    k1 << 0, std::sqrt(gamma), 0, 0;
    GateChannel out = identity_channel(1);
    out.label = "amplitude-damping";
    out.superoperator = unitary_superoperator(k0) + unitary_superoperator(k1);
    return out;
}

GateChannel tensor(const GateChannel& a, const GateChannel& b) {
    const int da = a.dimension();
    const int db = b.dimension();
    GateChannel out;
    out.label = a.label + "x" + b.label;
    out.qubits = a.qubits + b.qubits;
    out.ideal = Eigen::kroneckerProduct(a.ideal, b.ideal).eval();
    // Row-major vec of rho_a x rho_b interleaves the factors: index
    // ((ia,ib),(ja,jb)) rather than ((ia,ja),(ib,jb)).
    const int d = da * db;
    out.superoperator = Eigen::MatrixXcd::Zero(d * d, d * d);
    for (int ia = 0; ia < da; ++ia) {
        for (int ja = 0; ja < da; ++ja) {
            for (int ka = 0; ka < da; ++ka) {
                for (int la = 0; la < da; ++la) {
                    const auto sa = a.superoperator(ia * da + ja, ka * da + la);
                    if (sa == 0.0) {
                        continue;
                    }
                    for (int ib = 0; ib < db; ++ib) {
                        for (int jb = 0; jb < db; ++jb) {
                            for (int kb = 0; kb < db; ++kb) {
                                for (int lb = 0; lb < db; ++lb) {
                                    const auto sb = b.superoperator(ib * db + jb, kb * db + lb);
                                    const int row = (ia * db + ib) * d + (ja * db + jb);
                                    const int col = (ka * db + kb) * d + (la * db + lb);
                                    out.superoperator(row, col) += sa * sb;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return out;
}

GateChannel then(const GateChannel& first, const GateChannel& second) {
    if (first.qubits != second.qubits) {
        throw InputError("arity-mismatch", "cannot compose " + first.label + " with " + second.label);
    }
    return {second.label + "*" + first.label, first.qubits, second.ideal * first.ideal,
            second.superoperator * first.superoperator};
}

void require_cptp(const GateChannel& channel, double tolerance, bool leaky) {
    if (!channel.is_cp(tolerance) || !channel.is_tp(tolerance, leaky)) {
        throw InputError("not-cptp", "channel " + channel.label + " is not completely positive and trace preserving");
    }
}

}  // namespace stq
