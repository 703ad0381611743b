#include "stq/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

#include "stq/errors.hpp"

namespace stq {

namespace {

using Complex = std::complex<double>;

void check_schedule(const DeviceSpec& device, const ModeSubset& subset,
                    const FluxSchedule& schedule) {
    for (const auto& id : schedule.modes()) {
        if (!subset.contains(id)) {
            throw InputError("schedule-subset-mismatch",
                             "schedule drives '" + id + "' which is not in the mode subset");
        }
        if (!device.mode(id).flux_tunable) {
            throw InputError("fixed-frequency-mode", "schedule drives fixed-frequency mode '" + id + "'");
        }
    }
}

struct Step {
    double start;
    double length;
    bool constant;
};

// Splits [0, duration] into integration steps aligned with the schedule's
// breakpoints. Constant stretches become one step unless `hold` > 0, in
// which case they are cut into pieces no longer than `hold`.
std::vector<Step> plan_steps(const FluxSchedule& schedule, double dt, double hold) {
    if (!(dt > 0.0)) {
        throw InputError("bad-step", "dt must be positive");
    }
    std::vector<Step> steps;
    const auto points = schedule.breakpoints();
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        const double a = points[i];
        const double b = points[i + 1];
        const double len = b - a;
        if (len <= 0.0) {
            continue;
        }
        const bool constant = schedule.constant_between(a, b);
        const double target = constant ? hold : dt;
        const auto n = target > 0.0 ? static_cast<std::size_t>(std::ceil(len / target - 1e-9)) : 1;
        const double h = len / static_cast<double>(std::max<std::size_t>(n, 1));
        for (std::size_t k = 0; k < std::max<std::size_t>(n, 1); ++k) {
            steps.push_back({a + h * static_cast<double>(k), h, constant});
        }
    }
    return steps;
}

// Relaxation and dephasing generator applied in O(D^2) per mode using the
// ladder structure of the Fock basis.
class Dissipator {
public:
    Dissipator(const ModeSubset& subset, const NoiseSpec& noise) {
        const auto d = static_cast<Eigen::Index>(subset.dimension());
        decay_ = Eigen::MatrixXd::Zero(d, d);
        for (std::size_t k = 0; k < subset.size(); ++k) {
            const double g1 = noise.gamma1(subset.ids()[k]);
            const double gphi = noise.gamma_phi(subset.ids()[k]);
            if (g1 == 0.0 && gphi == 0.0) {
                continue;
            }
            const Eigen::VectorXd n = subset.number_diagonal(k);
            for (Eigen::Index i = 0; i < d; ++i) {
                for (Eigen::Index j = 0; j < d; ++j) {
                    const double dn = n(i) - n(j);
                    decay_(i, j) += 0.5 * g1 * (n(i) + n(j)) + gphi * dn * dn;
                }
            }
            max_rate_ = std::max(max_rate_, (g1 + 4.0 * gphi) * (subset.levels()[k] - 1));
            if (g1 > 0.0) {
                Jump jump{g1, std::vector<Eigen::Index>(static_cast<std::size_t>(d), -1),
                          Eigen::VectorXd::Zero(d)};
                for (Eigen::Index i = 0; i < d; ++i) {
                    auto occ = subset.occupation(static_cast<std::size_t>(i));
                    if (occ[k] + 1 < subset.levels()[k]) {
                        occ[k] += 1;
                        jump.raised[static_cast<std::size_t>(i)] =
                            static_cast<Eigen::Index>(subset.index_of(occ));
                        jump.amplitude(i) = std::sqrt(static_cast<double>(occ[k]));
                    }
                }
                jumps_.push_back(std::move(jump));
            }
        }
    }

    [[nodiscard]] bool empty() const { return max_rate_ == 0.0; }

    [[nodiscard]] Eigen::MatrixXcd apply(const Eigen::MatrixXcd& rho) const {
        Eigen::MatrixXcd out = -decay_.cast<Complex>().cwiseProduct(rho);
        const Eigen::Index d = rho.rows();
        for (const auto& jump : jumps_) {
            for (Eigen::Index j = 0; j < d; ++j) {
                const Eigen::Index uj = jump.raised[static_cast<std::size_t>(j)];
                if (uj < 0) {
                    continue;
                }
                for (Eigen::Index i = 0; i < d; ++i) {
                    const Eigen::Index ui = jump.raised[static_cast<std::size_t>(i)];
                    if (ui < 0) {
                        continue;
                    }
                    out(i, j) += jump.rate * jump.amplitude(i) * jump.amplitude(j) * rho(ui, uj);
                }
            }
        }
        return out;
    }

    // exp(D t) rho by RK4 with substeps keeping rate * h small.
    void propagate(Eigen::MatrixXcd& rho, double t) const {
        if (empty() || t <= 0.0) {
            return;
        }
        const auto n = static_cast<int>(std::ceil(t * max_rate_ / 0.05));
        const double h = t / std::max(n, 1);
        for (int s = 0; s < std::max(n, 1); ++s) {
            const Eigen::MatrixXcd k1 = apply(rho);
            const Eigen::MatrixXcd k2 = apply(rho + 0.5 * h * k1);
            const Eigen::MatrixXcd k3 = apply(rho + 0.5 * h * k2);
            const Eigen::MatrixXcd k4 = apply(rho + h * k3);
            rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
    }

private:
    struct Jump {
        double rate;
        std::vector<Eigen::Index> raised;  // index of the state one quantum up, or -1
        Eigen::VectorXd amplitude;         // sqrt(n + 1) for that transition
    };

    Eigen::MatrixXd decay_;
    std::vector<Jump> jumps_;
    double max_rate_ = 0.0;
};

}  // namespace

QuantumState QuantumState::basis(const ModeSubset& subset, const Occupation& occupation) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(subset.dimension()));
    v(static_cast<Eigen::Index>(subset.index_of(occupation))) = 1.0;
    return {subset, v};
}

DensityState DensityState::pure(const QuantumState& state) {
    return {state.subset, state.amplitudes * state.amplitudes.adjoint()};
}

double NoiseSpec::gamma1(const std::string& id) const {
    const auto it = t1_us.find(id);
    return it == t1_us.end() || std::isinf(it->second) ? 0.0 : 1.0 / (1e3 * it->second);
}

double NoiseSpec::gamma_phi(const std::string& id) const {
    const auto it = tphi_us.find(id);
    return it == tphi_us.end() || std::isinf(it->second) ? 0.0 : 1.0 / (1e3 * it->second);
}

bool NoiseSpec::is_noiseless() const {
    const auto finite = [](const auto& map) {
        return std::any_of(map.begin(), map.end(),
                           [](const auto& kv) { return std::isfinite(kv.second); });
    };
    return !finite(t1_us) && !finite(tphi_us);
}

NoiseSpec NoiseSpec::uniform(const std::vector<std::string>& ids, double t1_us, double tphi_us) {
    if (!(t1_us > 0.0) || !(tphi_us > 0.0)) {
        throw InputError("bad-coherence-time", "T1 and Tphi must be positive");
    }
    NoiseSpec spec;
    for (const auto& id : ids) {
        spec.t1_us[id] = t1_us;
        spec.tphi_us[id] = tphi_us;
    }
    return spec;
}

Eigen::MatrixXcd hermitian_exponential(const Eigen::MatrixXcd& h, double t) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h);
    if (solver.info() != Eigen::Success) {
        throw PhysicsError("eigensolver-failure",
                           "Hermitian eigensolver failed at dimension " + std::to_string(h.rows()));
    }
    const Eigen::VectorXcd phases =
        (solver.eigenvalues().cast<Complex>() * Complex(0.0, -t)).array().exp().matrix();
    return solver.eigenvectors() * phases.asDiagonal() * solver.eigenvectors().adjoint();
}

FluxBias bias_at(const DeviceSpec& device, const FluxSchedule& schedule, double t) {
    return device.idle_bias().merged(schedule.sample(t));
}

Eigen::MatrixXcd propagator(const DeviceSpec& device, const ModeSubset& subset,
                            const FluxSchedule& schedule, const EvolutionOptions& options,
                            const std::function<void(double, const Eigen::MatrixXcd&)>& observer) {
    check_schedule(device, subset, schedule);
    const auto d = static_cast<Eigen::Index>(subset.dimension());
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(d, d);
    const auto steps = plan_steps(schedule, options.dt, observer ? options.hold_dt : 0.0);
    Eigen::MatrixXcd cached;
    FluxBias cached_bias;
    double cached_length = -1.0;
    for (const auto& step : steps) {
        const auto bias = bias_at(device, schedule, step.start + 0.5 * step.length);
        Eigen::MatrixXcd step_u;
        if (step.constant && cached_length == step.length && cached_bias == bias) {
            step_u = cached;
        } else {
            const auto h = build_hamiltonian(device, subset, bias, options.form);
            step_u = hermitian_exponential(h.matrix, step.length);
            if (step.constant) {
                cached = step_u;
                cached_bias = bias;
                cached_length = step.length;
            }
        }
        u = step_u * u;
        if (observer) {
            observer(step.start + step.length, u);
        }
    }
    return u;
}

QuantumState evolve_unitary(const DeviceSpec& device, const FluxSchedule& schedule,
                            const QuantumState& state, const EvolutionOptions& options) {
    if (state.amplitudes.size() != static_cast<Eigen::Index>(state.subset.dimension())) {
        throw InputError("dimension-mismatch", "state dimension does not match its subset");
    }
    if (schedule.duration() == 0.0) {
        return state;
    }
    const auto u = propagator(device, state.subset, schedule, options);
    Eigen::VectorXcd out = u * state.amplitudes;
    const double drift = std::abs(out.norm() - state.amplitudes.norm());
    if (drift >= 1e-9) {
        throw PhysicsError("norm-drift", "norm drifted by " + std::to_string(drift) +
                                             "; reduce the time step");
    }
    out.normalize();
    return {state.subset, out};
}

DensityState evolve_lindblad(const DeviceSpec& device, const FluxSchedule& schedule,
                             const NoiseSpec& noise, const DensityState& rho,
                             const EvolutionOptions& options) {
    const auto d = static_cast<Eigen::Index>(rho.subset.dimension());
    if (rho.matrix.rows() != d || rho.matrix.cols() != d) {
        throw InputError("dimension-mismatch", "density matrix does not match its subset");
    }
    for (const auto* map : {&noise.t1_us, &noise.tphi_us}) {
        for (const auto& [id, value] : *map) {
            if (!(value > 0.0)) {
                throw InputError("bad-coherence-time", "coherence time of '" + id + "' must be > 0");
            }
        }
    }
    check_schedule(device, rho.subset, schedule);
    if (schedule.duration() == 0.0) {
        return rho;
    }
    const Dissipator dissipator(rho.subset, noise);
    const double initial_trace = rho.matrix.trace().real();

    Eigen::MatrixXcd state = rho.matrix;
    Eigen::MatrixXcd cached;
    FluxBias cached_bias;
    double cached_length = -1.0;
    for (const auto& step : plan_steps(schedule, options.dt, options.hold_dt)) {
        const auto bias = bias_at(device, schedule, step.start + 0.5 * step.length);
        if (!(step.constant && cached_length == step.length && cached_bias == bias)) {
            const auto h = build_hamiltonian(device, rho.subset, bias, options.form);
            cached = hermitian_exponential(h.matrix, step.length);
            cached_bias = bias;
            cached_length = step.constant ? step.length : -1.0;
        }
        dissipator.propagate(state, 0.5 * step.length);
        state = cached * state * cached.adjoint();
        dissipator.propagate(state, 0.5 * step.length);
    }
    state = 0.5 * (state + state.adjoint()).eval();

    const double drift = std::abs(state.trace().real() - initial_trace);
    if (drift > 1e-6) {
        throw PhysicsError("trace-drift", "trace drifted by " + std::to_string(drift));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(state, Eigen::EigenvaluesOnly);
    if (solver.eigenvalues().minCoeff() < -1e-6) {
        throw PhysicsError("negative-eigenvalue",
                           "density matrix eigenvalue " +
                               std::to_string(solver.eigenvalues().minCoeff()) + " below -1e-6");
    }
    return {rho.subset, state};
}

}  // namespace stq
