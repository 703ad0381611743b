#pragma once

#include <functional>
#include <limits>
#include <map>
#include <string>

#include <Eigen/Dense>

#include "stq/device.hpp"
#include "stq/hilbert.hpp"
#include "stq/schedule.hpp"

namespace stq {

struct QuantumState {
    ModeSubset subset;
    Eigen::VectorXcd amplitudes;

    /// Bare Fock state of the subset.
    static QuantumState basis(const ModeSubset& subset, const Occupation& occupation);
};

struct DensityState {
    ModeSubset subset;
    Eigen::MatrixXcd matrix;

    static DensityState pure(const QuantumState& state);
};

/// Per-mode coherence times in microseconds; modes not listed are noiseless.
struct NoiseSpec {
    std::map<std::string, double> t1_us;
    std::map<std::string, double> tphi_us;

    /// Relaxation and pure-dephasing rates in 1/ns (0 for infinite times).
    [[nodiscard]] double gamma1(const std::string& id) const;
    [[nodiscard]] double gamma_phi(const std::string& id) const;
    [[nodiscard]] bool is_noiseless() const;

    /// Same T1/Tphi on every listed mode.
    static NoiseSpec uniform(const std::vector<std::string>& ids, double t1_us,
                             double tphi_us = std::numeric_limits<double>::infinity());
};

struct EvolutionOptions {
    double dt = 0.01;       // ns, step inside time-varying stretches
    double hold_dt = 0.5;   // ns, Lindblad step on constant stretches
    CouplingForm form = CouplingForm::full_transverse;
};

/// Propagator over [0, schedule.duration()] by piecewise exponentiation: on
/// time-varying stretches each dt step uses exp(-i H(t_mid) dt), on constant
/// stretches one exact exponential. `observer` (optional) sees the propagator
/// accumulated up to each step end.
Eigen::MatrixXcd propagator(const DeviceSpec& device, const ModeSubset& subset,
                            const FluxSchedule& schedule, const EvolutionOptions& options = {},
                            const std::function<void(double, const Eigen::MatrixXcd&)>& observer = {});

/// Throws PhysicsError("norm-drift") if |1 - norm| >= 1e-9 before the final
/// renormalization.
QuantumState evolve_unitary(const DeviceSpec& device, const FluxSchedule& schedule,
                            const QuantumState& state, const EvolutionOptions& options = {});

/// Lindblad evolution with relaxation D[a_k] at 1/T1 and dephasing
/// (1/(2 Tphi)) D[2 n_k], so a qubit coherence decays at 1/(2 T1) + 1/Tphi.
/// Strang splitting: exact unitary half of each step, RK4 for the
/// dissipator halves. Throws PhysicsError on trace drift > 1e-6 or an
/// eigenvalue below -1e-6.
DensityState evolve_lindblad(const DeviceSpec& device, const FluxSchedule& schedule,
                             const NoiseSpec& noise, const DensityState& rho,
                             const EvolutionOptions& options = {});

/// exp(-i H t) of a Hermitian matrix via its eigendecomposition.
Eigen::MatrixXcd hermitian_exponential(const Eigen::MatrixXcd& h, double t);

/// Subset flux bias: the device idle bias overridden by the schedule at t.
FluxBias bias_at(const DeviceSpec& device, const FluxSchedule& schedule, double t);

}  // namespace stq
