#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "stq/evolution.hpp"
#include "stq/execution.hpp"
#include "stq/statics.hpp"

namespace stq {

/// The |11> <-> |doubly excited> transfer used by the diabatic CZ: `mobile`
/// is detuned, `doubled` is the qubit that holds two quanta in the target
/// state (|02> when the pair is written (mobile, doubled)).
struct TransferPlan {
    QubitPair pair;
    std::string mobile;
    std::string doubled;
    double idle_frequency_ghz = 0.0;    // mobile, at idle
    double target_frequency_ghz = 0.0;  // bare resonance estimate
};

/// Picks the mobile qubit: the tunable pair qubit whose move to the bare
/// resonance is smallest without crossing its partner's 0->1 frequency.
/// `mobile` forces the choice.
TransferPlan plan_transfer(const DeviceSpec& device, const QubitPair& pair,
                           const std::optional<std::string>& mobile = std::nullopt);

struct TransferResonance {
    double mobile_flux = 0.0;
    double mobile_frequency_ghz = 0.0;
    double lambda_mhz = 0.0;  // half the minimum |11>/|02> splitting
    double g_eff_mhz = 0.0;   // lambda / sqrt(2)
};

/// Static |11>/|02> avoided crossing at a fixed coupler flux, located by
/// sweeping the mobile qubit's frequency.
TransferResonance transfer_resonance(const DeviceSpec& device, const TransferPlan& plan,
                                     double coupler_flux);

/// Coupler flux at which the |11>/|02> coupling has magnitude `target_mhz`.
double coupler_flux_for_transfer(const DeviceSpec& device, const TransferPlan& plan,
                                 double target_mhz, double start_flux);

/// Default CZ working point: the coupler flux giving a |11>/|02> coupling of
/// `g_eff_mhz`, searched from 0.08 below the idle coupler flux.
double cz_coupler_flux(const DeviceSpec& device, const QubitPair& pair, double g_eff_mhz = 1.4,
                       const std::optional<std::string>& mobile = std::nullopt);

struct ChevronMap {
    QubitPair pair;
    std::string mobile;
    double coupler_flux = 0.0;
    TransferResonance resonance;
    std::vector<double> detunings_mhz;
    std::vector<double> times_ns;
    /// population[i * times + j] = P(|02>) at detuning i, time j.
    std::vector<double> population;

    [[nodiscard]] double at(std::size_t detuning, std::size_t time) const {
        return population[detuning * times_ns.size() + time];
    }
};

struct ChevronOptions {
    std::optional<std::string> mobile;
    Execution policy = Execution::parallel;
};

/// Square detuning pulses on the mobile qubit with the coupler held at
/// `coupler_flux`; the pair starts in the dressed |11> of the idle point and
/// P(|02>) is read out by projection on the same dressed basis. Detuning is
/// the mobile qubit's frequency offset from the static resonance.
ChevronMap chevron_scan(const DeviceSpec& device, const QubitPair& pair,
                        const std::vector<double>& detunings_mhz,
                        const std::vector<double>& times_ns, double coupler_flux,
                        const ChevronOptions& options = {});

struct CZCalibration {
    QubitPair pair;
    std::string mobile;
    std::string doubled;
    std::vector<std::string> couplers;
    double mobile_idle_flux = 0.0;
    double mobile_flux = 0.0;
    double coupler_idle_flux = 0.0;
    double coupler_flux = 0.0;
    double duration_ns = 0.0;  // including both edges
    double edge_ns = 2.0;
    double phase_a = 0.0;  // single-qubit phases removed by virtual Z (rad)
    double phase_b = 0.0;
    double conditional_phase = 0.0;
    double leakage = 0.0;  // from |11>, noiseless
    double g_eff_mhz = 0.0;

    [[nodiscard]] nlohmann::json to_json() const;
    static CZCalibration from_json(const nlohmann::json& document);
};

struct CZOptions {
    std::optional<std::string> mobile;
    double edge_ns = 2.0;
    double phase_tolerance = 0.01;    // rad
    double leakage_threshold = 1e-3;
    int max_iterations = 40;
    EvolutionOptions evolution;
};

/// Diabatic CZ: locate the static resonance, take one full
/// |11> -> |02> -> |11> cycle whose plateau length maximizes the return,
/// then adjust the plateau detuning until the conditional phase is pi.
CZCalibration calibrate_cz(const DeviceSpec& device, const QubitPair& pair,
                           double coupler_flux_guess, const CZOptions& options = {});

/// Schedule of a calibrated gate (flat-top on the mobile qubit and couplers).
FluxSchedule cz_schedule(const CZCalibration& calibration);

/// Dressed computational basis of the pair at idle: columns |00>,|01>,|10>,|11>
/// (first letter = pair.a) together with their idle energies.
struct ComputationalBasis {
    ModeSubset subset;
    Eigen::MatrixXcd vectors;
    Eigen::Vector4d energies;
};
ComputationalBasis computational_basis(const DeviceSpec& device, const QubitPair& pair);

/// 4x4 noiseless gate in the idle rotating frame with the virtual-Z
/// corrections applied.
Eigen::Matrix4cd cz_gate_matrix(const DeviceSpec& device, const CZCalibration& calibration,
                                const EvolutionOptions& options = {});

/// Reconstructed two-qubit process (projected on the computational subspace):
/// `apply(rho)` maps a 4x4 input to the 4x4 output.
struct TwoQubitProcess {
    /// superoperator[(k,l),(i,j)] with row-major pair indices k*4+l.
    Eigen::Matrix<std::complex<double>, 16, 16> superoperator;

    [[nodiscard]] Eigen::Matrix4cd apply(const Eigen::Matrix4cd& rho) const;
};

TwoQubitProcess cz_process(const DeviceSpec& device, const CZCalibration& calibration,
                           const NoiseSpec& noise, const EvolutionOptions& options = {},
                           Execution policy = Execution::parallel);

struct GateFidelity {
    double average_fidelity = 0.0;
    double process_fidelity = 0.0;
    double leakage = 0.0;  // averaged over computational inputs
};

/// Average gate fidelity against the ideal CZ, F = (d F_pro + 1)/(d + 1).
GateFidelity gate_fidelity(const DeviceSpec& device, const CZCalibration& calibration,
                           const NoiseSpec& noise, const EvolutionOptions& options = {},
                           Execution policy = Execution::parallel);

/// Fidelity of a process against an arbitrary 4x4 target unitary.
GateFidelity process_fidelity(const TwoQubitProcess& process, const Eigen::Matrix4cd& target);

/// First-order coherence estimate: noiseless fidelity minus the
/// time-integrated jump-operator error on the computational subspace,
/// 1 - F_e = sum_k int dt [Tr(P L~+ L~ P)/d - |Tr(P L~ P)|^2/d^2].
double coherence_limited_fidelity(const DeviceSpec& device, const CZCalibration& calibration,
                                  const NoiseSpec& noise, const EvolutionOptions& options = {});

Eigen::Matrix4cd ideal_cz();

}  // namespace stq
