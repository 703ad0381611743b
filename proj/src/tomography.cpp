#include "stq/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <unsupported/Eigen/KroneckerProduct>

#include "stq/errors.hpp"
#include "stq/seeding.hpp"

namespace stq {

namespace {

using Complex = std::complex<double>;

constexpr int minimum_shots = 100;
constexpr std::uint64_t qst_stream = stream_key("qst");

Eigen::Matrix2cd single_pauli(char c) {
    Eigen::Matrix2cd m;
    switch (c) {
        case 'I':
            m << 1, 0, 0, 1;
            break;
        case 'X':
            m << 0, 1, 1, 0;
            break;
        case 'Y':
            m << 0, Complex(0, -1), Complex(0, 1), 0;
            break;
        case 'Z':
            m << 1, 0, 0, -1;
            break;
        default:
            throw InputError("bad-pauli", std::string("unknown Pauli letter '") + c + "'");
    }
    return m;
}

Eigen::Matrix2cd hadamard() {
    Eigen::Matrix2cd h;
    h << 1, 1, 1, -1;
    return h / std::sqrt(2.0);
}

int qubits_of(const Eigen::MatrixXcd& rho) {
    if (rho.rows() == 2 && rho.cols() == 2) {
        return 1;
    }
    if (rho.rows() == 4 && rho.cols() == 4) {
        return 2;
    }
    throw InputError("unsupported-arity", "tomography supports 1 or 2 qubits");
}

}  // namespace

std::vector<std::string> pauli_settings(int qubits) {
    if (qubits != 1 && qubits != 2) {
        throw InputError("unsupported-arity", "tomography supports 1 or 2 qubits");
    }
    const std::string letters = "IXYZ";
    std::vector<std::string> out;
    if (qubits == 1) {
        for (std::size_t k = 1; k < 4; ++k) {
            out.emplace_back(1, letters[k]);
        }
        return out;
    }
    for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) {
            if (a + b > 0) {
                out.push_back(std::string{letters[a], letters[b]});
            }
        }
    }
    return out;
}

Eigen::MatrixXcd pauli_operator(const std::string& label) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
    for (const char c : label) {
        m = Eigen::kroneckerProduct(m, single_pauli(c)).eval();
    }
    return m;
}

std::vector<double> pauli_expectations(const Eigen::MatrixXcd& rho,
                                       const std::vector<std::string>& settings) {
    std::vector<double> out;
    for (const auto& s : settings) {
        out.push_back((pauli_operator(s) * rho).trace().real());
    }
    return out;
}

Eigen::MatrixXcd linear_inversion(int qubits, const std::vector<std::string>& settings,
                                  const std::vector<double>& expectations) {
    const auto full = pauli_settings(qubits);
    if (settings != full || expectations.size() != full.size()) {
        throw InputError("incomplete-settings", "linear inversion needs every non-identity Pauli string");
    }
    const int d = 1 << qubits;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Identity(d, d);
    for (std::size_t k = 0; k < settings.size(); ++k) {
        rho += expectations[k] * pauli_operator(settings[k]);
    }
    return rho / static_cast<double>(d);
}

Eigen::MatrixXcd project_psd(const Eigen::MatrixXcd& rho) {
    const Eigen::MatrixXcd h = 0.5 * (rho + rho.adjoint());
    const double trace = h.trace().real();
    if (!(trace > 0.0)) {
        throw PhysicsError("bad-trace", "cannot project a matrix with non-positive trace");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h / trace);
    Eigen::VectorXd mu = solver.eigenvalues();  // ascending
    const auto d = mu.size();
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(d);
    // Walk from the most negative eigenvalue upwards.
    double carried = 0.0;
    Eigen::Index first = 0;
    while (first < d && mu(first) + carried / static_cast<double>(d - first) < 0.0) {
        carried += mu(first);
        ++first;
    }
    for (Eigen::Index i = first; i < d; ++i) {
        lambda(i) = mu(i) + carried / static_cast<double>(d - first);
    }
    const Eigen::MatrixXcd v = solver.eigenvectors();
    return v * lambda.cast<Complex>().asDiagonal() * v.adjoint();
}

TomographyResult state_tomography(const Eigen::MatrixXcd& rho, const TomographyOptions& options) {
    TomographyResult out;
    out.qubits = qubits_of(rho);
    out.settings = pauli_settings(out.qubits);
    out.shots = options.shots;
    const auto exact = pauli_expectations(rho, out.settings);
    if (!options.shots) {
        out.expectations = exact;
    } else {
        if (*options.shots < minimum_shots) {
            throw InputError("too-few-shots", "tomography needs at least " +
                                                  std::to_string(minimum_shots) + " shots per setting");
        }
        for (std::size_t k = 0; k < exact.size(); ++k) {
            std::mt19937_64 rng(derive_seed(options.seed, {qst_stream, k}));
            const double p_plus = std::clamp((1.0 + exact[k]) / 2.0, 0.0, 1.0);
            std::binomial_distribution<int> counts(*options.shots, p_plus);
            const int plus = counts(rng);
            out.expectations.push_back(2.0 * plus / *options.shots - 1.0);
        }
    }
    out.linear = linear_inversion(out.qubits, out.settings, out.expectations);
    out.rho = project_psd(out.linear);
    return out;
}

double state_fidelity(const Eigen::MatrixXcd& rho, const Eigen::VectorXcd& psi) {
    if (rho.rows() != psi.size() || rho.cols() != psi.size()) {
        throw InputError("dimension-mismatch", "state and density matrix dimensions differ");
    }
    return std::clamp(psi.dot(rho * psi).real(), 0.0, 1.0);
}

Eigen::Vector4cd bell_state() {
    Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
    psi(0) = psi(3) = 1.0 / std::sqrt(2.0);
    return psi;
}

Eigen::Matrix4cd bell_circuit(const TwoQubitProcess& cz) {
    const Eigen::Matrix2cd h = hadamard();
    const Eigen::Matrix4cd hh = Eigen::kroneckerProduct(h, h).eval();
    const Eigen::Matrix4cd ih = Eigen::kroneckerProduct(Eigen::Matrix2cd::Identity(), h).eval();
    Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
    rho(0, 0) = 1.0;
    rho = hh * rho * hh.adjoint();
    rho = cz.apply(rho);
    const double kept = rho.trace().real();
    if (!(kept > 0.0)) {
        throw PhysicsError("total-leakage", "no population left in the computational subspace");
    }
    rho /= kept;
    return ih * rho * ih.adjoint();
}

Eigen::Matrix4cd prepare_bell(const DeviceSpec& device, const QubitPair& pair,
                              const CZCalibration& calibration, const NoiseSpec& noise,
                              const BellOptions& options) {
    if (pair.a != calibration.pair.a || pair.b != calibration.pair.b) {
        throw InputError("calibration-mismatch", "calibration is for " + calibration.pair.a + "," +
                                                     calibration.pair.b + ", not " + pair.a + "," + pair.b);
    }
    TwoQubitProcess cz;
    if (options.ideal_cz) {
        const Eigen::Matrix4cd u = ideal_cz();
        cz.superoperator = Eigen::kroneckerProduct(u, u.conjugate()).eval();
    } else {
        cz = cz_process(device, calibration, noise, options.evolution, options.policy);
    }
    return bell_circuit(cz);
}

nlohmann::json TomographyResult::to_json(std::optional<double> fidelity) const {
    nlohmann::json j;
    j["pauli_settings"] = settings;
    j["expectations"] = expectations;
    j["shots"] = shots ? nlohmann::json(*shots) : nlohmann::json("exact");
    j["method"] = method;
    std::vector<std::vector<double>> re(rho.rows(), std::vector<double>(rho.cols()));
    auto im = re;
    for (Eigen::Index r = 0; r < rho.rows(); ++r) {
        for (Eigen::Index c = 0; c < rho.cols(); ++c) {
            re[r][c] = rho(r, c).real();
            im[r][c] = rho(r, c).imag();
        }
    }
    j["rho_real"] = re;
    j["rho_imag"] = im;
    j["fidelity"] = fidelity ? nlohmann::json(*fidelity) : nlohmann::json();
    return j;
}

}  // namespace stq
