#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "stq/cz.hpp"

namespace stq {

/// Non-identity Pauli strings on 1 or 2 qubits ("X", "IZ", "XY", ...),
/// first letter = most significant qubit.
std::vector<std::string> pauli_settings(int qubits);
Eigen::MatrixXcd pauli_operator(const std::string& label);

std::vector<double> pauli_expectations(const Eigen::MatrixXcd& rho,
                                       const std::vector<std::string>& settings);

/// rho = (I + sum <P> P) / d over the full non-identity set.
Eigen::MatrixXcd linear_inversion(int qubits, const std::vector<std::string>& settings,
                                  const std::vector<double>& expectations);

/// Closest unit-trace PSD matrix in the 2-norm: negative eigenvalues are
/// zeroed and their weight spread evenly over the remaining ones.
Eigen::MatrixXcd project_psd(const Eigen::MatrixXcd& rho);

struct TomographyOptions {
    std::optional<int> shots;  // exact expectations when unset
    std::uint64_t seed = 0;
};

struct TomographyResult {
    int qubits = 1;
    std::vector<std::string> settings;
    std::vector<double> expectations;
    std::optional<int> shots;
    Eigen::MatrixXcd linear;  // before projection
    Eigen::MatrixXcd rho;
    std::string method = "linear-inversion+psd-projection";

    [[nodiscard]] nlohmann::json to_json(std::optional<double> fidelity = std::nullopt) const;
};

/// Pauli expectations of `rho` (exact or binomially sampled per setting),
/// linear inversion, PSD projection. Throws InputError("too-few-shots")
/// below 100 shots.
TomographyResult state_tomography(const Eigen::MatrixXcd& rho, const TomographyOptions& options = {});

/// <psi|rho|psi>. Throws InputError("dimension-mismatch").
double state_fidelity(const Eigen::MatrixXcd& rho, const Eigen::VectorXcd& psi);

/// (|00> + |11>)/sqrt(2).
Eigen::Vector4cd bell_state();

struct BellOptions {
    bool ideal_cz = false;
    EvolutionOptions evolution;
    Execution policy = Execution::parallel;
};

/// H x H, CZ, then H on the second qubit, starting from |00>. The CZ is the
/// reconstructed physical process (renormalized after leakage) unless
/// `ideal_cz`. Throws InputError("calibration-mismatch") if the calibration
/// belongs to another pair.
Eigen::Matrix4cd prepare_bell(const DeviceSpec& device, const QubitPair& pair,
                              const CZCalibration& calibration, const NoiseSpec& noise,
                              const BellOptions& options = {});

/// The same circuit around an explicit CZ process.
Eigen::Matrix4cd bell_circuit(const TwoQubitProcess& cz);

}  // namespace stq
