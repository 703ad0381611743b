#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <json.hpp>

#include "stq/channel.hpp"
#include "stq/clifford.hpp"
#include "stq/execution.hpp"

namespace stq {

/// Gates available to an RB experiment. Cliffords are ideal unitaries
/// followed by `clifford_noise`; two-qubit Cliffords use `cz` for their CZ
/// layers when it is set.
struct GateSet {
    int qubits = 1;
    std::optional<GateChannel> clifford_noise;
    std::optional<GateChannel> cz;
};

/// Residual ZZ acting while both qubits run their Cliffords side by side:
/// each Clifford slot adds exp(-i (2 pi zeta / 4) Z x Z tau).
struct SimultaneousContext {
    double zz_mhz = 0.0;
    double clifford_duration_ns = 40.0;
};

/// Powers of two from 2 to 256.
std::vector<int> default_rb_lengths();

struct RBOptions {
    std::vector<int> lengths = default_rb_lengths();
    int sequences_per_length = 30;
    std::uint64_t seed = 0;
    /// Substream of the Clifford draws; simultaneous RB gives qubit k
    /// substream k, so an isolated run with the same substream reuses the
    /// same sequences.
    std::uint64_t substream = 0;
    int bootstrap_resamples = 200;
    Execution policy = Execution::parallel;
};

struct RBFit {
    double a = 0.0;
    double b = 0.0;
    double p = 0.0;
    double residual_rms = 0.0;
};

struct RBResult {
    int qubits = 1;
    std::vector<int> lengths;
    std::vector<std::vector<double>> survival;  // [length][sequence]
    std::vector<double> survival_mean;
    std::vector<double> survival_std;
    RBFit fit;
    double r = 0.0;             // error per Clifford, (1 - p)(d - 1)/d
    double fidelity = 0.0;      // 1 - r
    double p_std = 0.0;         // bootstrap standard deviation of p
    /// Per physical pulse (1.875 pulses per single-qubit Clifford); unset
    /// for two qubits.
    std::optional<double> per_gate_fidelity;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// A p^m + B by Levenberg-Marquardt, seeded at A = 1 - 1/d, B = 1/d.
/// A flat decay fits p = 1. Throws PhysicsError("fit-not-converged") or
/// PhysicsError("p-out-of-range").
RBFit fit_rb_decay(const std::vector<int>& lengths, const std::vector<double>& survival, int d);

/// Fit plus bootstrap over sequences (resampled within each length).
RBResult analyze_rb(int qubits, const std::vector<int>& lengths,
                    std::vector<std::vector<double>> survival, int resamples, std::uint64_t seed);

RBResult run_rb(const GateSet& gates, const RBOptions& options = {});

/// Two single-qubit experiments run side by side on a joint channel; the
/// result for qubit k uses substream k. `gates` describes one qubit.
std::vector<RBResult> run_simultaneous_rb(const GateSet& gates, const SimultaneousContext& context,
                                          const RBOptions& options = {});

struct InterleavedResult {
    RBResult reference;
    RBResult interleaved;
    double ratio = 0.0;
    double fidelity = 0.0;
    double fidelity_std = 0.0;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Reference and interleaved decays on the same Clifford draws;
/// F = 1 - (1 - p_il / p_ref)(d - 1)/d. Throws PhysicsError("unphysical-ratio")
/// when p_il exceeds p_ref beyond twice the combined bootstrap error.
InterleavedResult run_interleaved_rb(const GateSet& gates, const GateChannel& target,
                                     const RBOptions& options = {});

/// Channel of one two-qubit process from `dynamics`, as a GateChannel whose
/// ideal unitary is `ideal`.
GateChannel process_channel(const std::string& label, const Eigen::MatrixXcd& superoperator,
                            const Eigen::MatrixXcd& ideal);

}  // namespace stq
