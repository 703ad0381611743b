#pragma once

#include <cmath>
#include <complex>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>

#include "stq/device.hpp"
#include "stq/units.hpp"

namespace testing {

inline const stq::DeviceSpec& paper_like() {
    static const stq::DeviceSpec device = stq::load_device_file(stq::paper_like_config_path());
    return device;
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("stq_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Hamiltonian assembled directly from Kronecker products of single-mode
// operators, written independently of the library's index arithmetic.
inline Eigen::MatrixXcd kronecker_hamiltonian(const stq::DeviceSpec& device,
                                              const std::vector<std::string>& ids,
                                              const stq::FluxBias& bias, bool rwa = false) {
    using Eigen::MatrixXcd;
    std::vector<MatrixXcd> lowering;
    std::vector<int> levels;
    for (const auto& id : ids) {
        const int n = device.mode(id).levels;
        MatrixXcd a = MatrixXcd::Zero(n, n);
        for (int k = 1; k < n; ++k) {
            a(k - 1, k) = std::sqrt(static_cast<double>(k));
        }
        lowering.push_back(a);
        levels.push_back(n);
    }
    const auto embed = [&](std::size_t which, const MatrixXcd& op) {
        MatrixXcd out = MatrixXcd::Identity(1, 1);
        for (std::size_t k = 0; k < ids.size(); ++k) {
            const MatrixXcd factor = k == which ? op : MatrixXcd::Identity(levels[k], levels[k]);
            out = Eigen::kroneckerProduct(out, factor).eval();
        }
        return out;
    };
    int dim = 1;
    for (const int n : levels) {
        dim *= n;
    }
    MatrixXcd h = MatrixXcd::Zero(dim, dim);
    for (std::size_t k = 0; k < ids.size(); ++k) {
        const auto& m = device.mode(ids[k]);
        const double w = stq::units::angular(device.frequency_ghz(ids[k], bias));
        const double alpha = stq::units::angular(m.anharmonicity_ghz);
        const MatrixXcd n = lowering[k].adjoint() * lowering[k];
        h += embed(k, w * n + 0.5 * alpha * n * (n - MatrixXcd::Identity(levels[k], levels[k])));
    }
    for (std::size_t j = 0; j < ids.size(); ++j) {
        for (std::size_t k = j + 1; k < ids.size(); ++k) {
            const auto edge = device.coupling_between(ids[j], ids[k]);
            if (!edge) {
                continue;
            }
            double g = edge->g0_ghz;
            if (edge->scaling == stq::CouplingScaling::sqrt_frequency) {
                const auto& coupler = device.mode(ids[j]).is_coupler() ? ids[j] : ids[k];
                g *= std::sqrt(device.frequency_ghz(coupler, bias) / device.mode(coupler).max_frequency_ghz);
            }
            g = stq::units::angular(g);
            const MatrixXcd aj = embed(j, lowering[j]);
            const MatrixXcd ak = embed(k, lowering[k]);
            if (rwa) {
                h += g * (aj.adjoint() * ak + aj * ak.adjoint());
            } else {
                h += g * (aj + aj.adjoint()) * (ak + ak.adjoint());
            }
        }
    }
    return h;
}

// Basis index of an occupation tuple (first mode most significant).
inline int occupation_index(const std::vector<int>& levels, const std::vector<int>& occ) {
    int index = 0;
    for (std::size_t k = 0; k < levels.size(); ++k) {
        index = index * levels[k] + occ[k];
    }
    return index;
}

// Energy of the eigenvector with the largest overlap on a bare state, using
// a general complex eigensolver as the reference.
inline double reference_energy(const Eigen::MatrixXcd& h, int bare) {
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(h);
    Eigen::Index best = 0;
    double overlap = -1.0;
    for (Eigen::Index k = 0; k < h.rows(); ++k) {
        const double o = std::norm(solver.eigenvectors()(bare, k)) / solver.eigenvectors().col(k).squaredNorm();
        if (o > overlap) {
            overlap = o;
            best = k;
        }
    }
    return solver.eigenvalues()(best).real();
}

}  // namespace testing
