#include "stq/cz.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "stq/errors.hpp"
#include "stq/units.hpp"

namespace stq {

namespace {

using Complex = std::complex<double>;
constexpr double pi = std::numbers::pi;

double wrap_phase(double phase) {
    phase = std::fmod(phase, 2.0 * pi);
    return phase < 0.0 ? phase + 2.0 * pi : phase;
}

double tunable_floor_ghz(const ModeSpec& mode) {
    return mode.max_frequency_ghz * std::sqrt(mode.junction_asymmetry);
}

std::string tunable_coupler(const DeviceSpec& device, const QubitPair& pair) {
    for (const auto& c : device.couplers_between(pair.a, pair.b)) {
        if (device.mode(c).flux_tunable) {
            return c;
        }
    }
    throw InputError("no-tunable-coupler",
                     "pair " + pair.a + "-" + pair.b + " has no flux-tunable coupler");
}

// Index of an occupation of the pair's computational states, |ab> -> 2a + b.
Occupation computational_occupation(const ModeSubset& subset, const QubitPair& pair, int k) {
    return subset.excite({{pair.a, k / 2}, {pair.b, k % 2}});
}

// Propagators around one flat-top pulse with a variable plateau: the rise,
// the fall, and the plateau eigendecomposition.
struct PulsePieces {
    Eigen::MatrixXcd rise;
    Eigen::MatrixXcd fall;
    Eigen::MatrixXcd plateau_vectors;
    Eigen::VectorXd plateau_energies;

    [[nodiscard]] Eigen::MatrixXcd plateau(double t) const {
        const Eigen::VectorXcd phases =
            (plateau_energies.cast<Complex>() * Complex(0.0, -t)).array().exp().matrix();
        return plateau_vectors * phases.asDiagonal() * plateau_vectors.adjoint();
    }
};

PulsePieces pulse_pieces(const DeviceSpec& device, const ModeSubset& subset,
                         const CZCalibration& cal, const EvolutionOptions& options) {
    PulsePieces pieces;
    const auto d = static_cast<Eigen::Index>(subset.dimension());
    pieces.rise = Eigen::MatrixXcd::Identity(d, d);
    pieces.fall = Eigen::MatrixXcd::Identity(d, d);
    if (cal.edge_ns > 0.0) {
        CZCalibration edges_only = cal;
        edges_only.duration_ns = 2.0 * cal.edge_ns;
        const auto schedule = cz_schedule(edges_only);
        Eigen::MatrixXcd at_edge = pieces.rise;
        const auto full = propagator(device, subset, schedule, options,
                                     [&](double t, const Eigen::MatrixXcd& u) {
                                         if (std::abs(t - cal.edge_ns) < 1e-9) {
                                             at_edge = u;
                                         }
                                     });
        pieces.rise = at_edge;
        pieces.fall = full * at_edge.adjoint();
    }
    FluxBias plateau_bias = device.idle_bias();
    plateau_bias.set(cal.mobile, cal.mobile_flux);
    for (const auto& c : cal.couplers) {
        plateau_bias.set(c, cal.coupler_flux);
    }
    const auto h = build_hamiltonian(device, subset, plateau_bias, options.form);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.matrix);
    pieces.plateau_vectors = solver.eigenvectors();
    pieces.plateau_energies = solver.eigenvalues();
    return pieces;
}

// Computational block of a full propagator in the idle rotating frame
// (before virtual-Z corrections).
Eigen::Matrix4cd frame_block(const ComputationalBasis& basis, const Eigen::MatrixXcd& u,
                             double duration) {
    Eigen::Matrix4cd m = basis.vectors.adjoint() * u * basis.vectors;
    for (int k = 0; k < 4; ++k) {
        m.row(k) *= std::exp(Complex(0.0, basis.energies(k) * duration));
    }
    return m;
}

struct Phases {
    double a;
    double b;
    double conditional;
};

Phases phases_of(const Eigen::Matrix4cd& m) {
    const double p00 = std::arg(m(0, 0));
    const double p01 = std::arg(m(1, 1));
    const double p10 = std::arg(m(2, 2));
    const double p11 = std::arg(m(3, 3));
    return {wrap_phase(p10 - p00), wrap_phase(p01 - p00), wrap_phase(p11 - p10 - p01 + p00)};
}

Eigen::Matrix4cd virtual_z(double phase_a, double phase_b) {
    Eigen::Matrix4cd z = Eigen::Matrix4cd::Zero();
    z(0, 0) = 1.0;
    z(1, 1) = std::exp(Complex(0.0, -phase_b));
    z(2, 2) = std::exp(Complex(0.0, -phase_a));
    z(3, 3) = std::exp(Complex(0.0, -phase_a - phase_b));
    return z;
}

}  // namespace

TransferPlan plan_transfer(const DeviceSpec& device, const QubitPair& pair,
                           const std::optional<std::string>& mobile) {
    pair_subset(device, pair);
    struct Candidate {
        TransferPlan plan;
        double move;
    };
    std::vector<Candidate> candidates;
    for (const auto& [m, p] : {std::pair{pair.a, pair.b}, std::pair{pair.b, pair.a}}) {
        if (mobile && *mobile != m) {
            continue;
        }
        const auto& mode = device.mode(m);
        if (!mode.flux_tunable) {
            continue;
        }
        const double f_m = device.frequency_ghz(m, {});
        const double f_p = device.frequency_ghz(p, {});
        // |11> resonant with two quanta in p (m below p) or in m (m above p).
        const double below = f_p + device.mode(p).anharmonicity_ghz;
        const double above = f_p - mode.anharmonicity_ghz;
        if (f_m < f_p && below <= mode.max_frequency_ghz && below > tunable_floor_ghz(mode)) {
            candidates.push_back({{pair, m, p, f_m, below}, std::abs(below - f_m)});
        }
        if (f_m > f_p && above <= mode.max_frequency_ghz && above > tunable_floor_ghz(mode)) {
            candidates.push_back({{pair, m, m, f_m, above}, std::abs(above - f_m)});
        }
    }
    if (candidates.empty()) {
        throw PhysicsError("no-transfer-resonance",
                           "no tunable qubit of " + pair.a + "-" + pair.b +
                               " can reach the |11>-|02> resonance without crossing its partner");
    }
    return std::min_element(candidates.begin(), candidates.end(),
                            [](const Candidate& x, const Candidate& y) { return x.move < y.move; })
        ->plan;
}

TransferResonance transfer_resonance(const DeviceSpec& device, const TransferPlan& plan,
                                     double coupler_flux) {
    const auto subset = pair_subset(device, plan.pair);
    const auto bias = with_pair_coupler_flux(device, plan.pair, coupler_flux, device.idle_bias());
    const auto& mode = device.mode(plan.mobile);
    constexpr double window = 0.1;
    const double lo = std::max(plan.target_frequency_ghz - window, tunable_floor_ghz(mode) + 1e-9);
    const double hi = std::min(plan.target_frequency_ghz + window, mode.max_frequency_ghz);
    const auto crossing = find_avoided_crossing(
        device, subset, plan.mobile, bias, subset.excite({{plan.pair.a, 1}, {plan.pair.b, 1}}),
        subset.excite({{plan.doubled, 2}}), lo, hi);
    const double lambda = 0.5 * crossing.gap_mhz;
    return {crossing.flux, crossing.frequency_ghz, lambda, lambda / std::sqrt(2.0)};
}

double coupler_flux_for_transfer(const DeviceSpec& device, const TransferPlan& plan,
                                 double target_mhz, double start_flux) {
    if (!(target_mhz > 0.0)) {
        throw InputError("bad-coupling-target", "target g_eff must be positive");
    }
    tunable_coupler(device, plan.pair);
    constexpr double flux_max = 0.499;
    const auto residual = [&](double flux) {
        return transfer_resonance(device, plan, flux).g_eff_mhz - target_mhz;
    };
    double x0 = std::clamp(start_flux, 0.0, flux_max);
    double x1 = std::clamp(x0 + 0.005, 0.0, flux_max);
    double r0 = residual(x0);
    double r1 = residual(x1);
    for (int iter = 0; iter < 60; ++iter) {
        if (std::abs(r1) < 1e-4 * target_mhz) {
            return x1;
        }
        if (r1 == r0) {
            break;
        }
        const double step = std::clamp(-r1 * (x1 - x0) / (r1 - r0), -0.02, 0.02);
        const double x2 = std::clamp(x1 + step, 0.0, flux_max);
        if (x2 == x1) {
            break;
        }
        x0 = x1;
        r0 = r1;
        x1 = x2;
        r1 = residual(x1);
    }
    throw PhysicsError("coupling-unreachable",
                       "|11>-|02> coupling of " + std::to_string(target_mhz) +
                           " MHz not reachable from coupler flux " + std::to_string(start_flux));
}

double cz_coupler_flux(const DeviceSpec& device, const QubitPair& pair, double g_eff_mhz,
                       const std::optional<std::string>& mobile) {
    const auto plan = plan_transfer(device, pair, mobile);
    const auto couplers = device.couplers_between(pair.a, pair.b);
    if (couplers.empty()) {
        throw InputError("no-coupler", pair.a + " and " + pair.b + " share no coupler");
    }
    const double start = std::max(0.0, device.flux_of(couplers.front(), {}) - 0.08);
    return coupler_flux_for_transfer(device, plan, g_eff_mhz, start);
}

ChevronMap chevron_scan(const DeviceSpec& device, const QubitPair& pair,
                        const std::vector<double>& detunings_mhz,
                        const std::vector<double>& times_ns, double coupler_flux,
                        const ChevronOptions& options) {
    if (detunings_mhz.empty() || times_ns.empty()) {
        throw InputError("empty-grid", "chevron grids must not be empty");
    }
    for (double t : times_ns) {
        if (!(t >= 0.0) || !std::isfinite(t)) {
            throw InputError("bad-time", "chevron times must be finite and >= 0");
        }
    }
    const auto plan = plan_transfer(device, pair, options.mobile);
    const auto& mode = device.mode(plan.mobile);
    const auto resonance = transfer_resonance(device, plan, coupler_flux);
    for (double delta : detunings_mhz) {
        const double f = resonance.mobile_frequency_ghz + 1e-3 * delta;
        if (!(f > tunable_floor_ghz(mode)) || f > mode.max_frequency_ghz || !std::isfinite(f)) {
            throw InputError("detuning-out-of-range",
                             "detuning " + std::to_string(delta) + " MHz moves " + plan.mobile +
                                 " outside its tunable range");
        }
    }

    const auto subset = pair_subset(device, pair);
    // Prepared and read out in the dressed basis of the full idle point.
    const auto readout = eigensystem(build_hamiltonian(device, subset, device.idle_bias()), subset, 4);
    const auto pulse_bias = with_pair_coupler_flux(device, pair, coupler_flux, device.idle_bias());
    const Eigen::VectorXcd start = readout.vector(subset.excite({{pair.a, 1}, {pair.b, 1}}));
    const Eigen::VectorXcd target = readout.vector(subset.excite({{plan.doubled, 2}}));

    ChevronMap map{pair, plan.mobile, coupler_flux, resonance, detunings_mhz, times_ns,
                   std::vector<double>(detunings_mhz.size() * times_ns.size())};
    for_each_index(detunings_mhz.size(), options.policy, [&](std::size_t i) {
        FluxBias bias = pulse_bias;
        bias.set(plan.mobile,
                 flux_for_frequency(mode, resonance.mobile_frequency_ghz + 1e-3 * detunings_mhz[i]));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
            build_hamiltonian(device, subset, bias).matrix);
        const Eigen::VectorXcd c0 = solver.eigenvectors().adjoint() * start;
        const Eigen::VectorXcd ct = solver.eigenvectors().adjoint() * target;
        for (std::size_t j = 0; j < times_ns.size(); ++j) {
            Complex amp = 0.0;
            for (Eigen::Index e = 0; e < c0.size(); ++e) {
                amp += std::conj(ct(e)) * c0(e) *
                       std::exp(Complex(0.0, -solver.eigenvalues()(e) * times_ns[j]));
            }
            map.population[i * times_ns.size() + j] = std::norm(amp);
        }
    });
    return map;
}

FluxSchedule cz_schedule(const CZCalibration& cal) {
    FluxSchedule schedule(cal.duration_ns);
    if (cal.duration_ns <= 0.0) {
        return schedule;
    }
    schedule.flat_top(cal.mobile, 0.0, cal.duration_ns, cal.mobile_idle_flux, cal.mobile_flux,
                      cal.edge_ns);
    for (const auto& c : cal.couplers) {
        schedule.flat_top(c, 0.0, cal.duration_ns, cal.coupler_idle_flux, cal.coupler_flux,
                          cal.edge_ns);
    }
    return schedule;
}

ComputationalBasis computational_basis(const DeviceSpec& device, const QubitPair& pair) {
    const auto subset = pair_subset(device, pair);
    const auto spectrum =
        eigensystem(build_hamiltonian(device, subset, device.idle_bias()), subset, 2);
    ComputationalBasis basis{subset, Eigen::MatrixXcd(subset.dimension(), 4), {}};
    for (int k = 0; k < 4; ++k) {
        const auto occ = computational_occupation(subset, pair, k);
        basis.vectors.col(k) = spectrum.vector(occ);
        basis.energies(k) = spectrum.energy(occ);
    }
    return basis;
}

CZCalibration calibrate_cz(const DeviceSpec& device, const QubitPair& pair,
                           double coupler_flux_guess, const CZOptions& options) {
    const auto plan = plan_transfer(device, pair, options.mobile);
    const auto coupler = tunable_coupler(device, pair);
    const auto resonance = transfer_resonance(device, plan, coupler_flux_guess);
    if (resonance.lambda_mhz < 1e-3) {
        throw PhysicsError("no-resonant-transfer",
                           "|11>-|02> coupling of " + pair.a + "-" + pair.b +
                               " vanishes at coupler flux " + std::to_string(coupler_flux_guess));
    }

    const auto basis = computational_basis(device, pair);
    const auto& subset = basis.subset;
    const auto& mode = device.mode(plan.mobile);

    CZCalibration cal;
    cal.pair = pair;
    cal.mobile = plan.mobile;
    cal.doubled = plan.doubled;
    cal.couplers = device.couplers_between(pair.a, pair.b);
    cal.couplers.erase(std::remove_if(cal.couplers.begin(), cal.couplers.end(),
                                      [&](const std::string& c) {
                                          return !device.mode(c).flux_tunable;
                                      }),
                       cal.couplers.end());
    cal.mobile_idle_flux = device.flux_of(plan.mobile, {});
    cal.coupler_idle_flux = device.flux_of(coupler, {});
    cal.coupler_flux = coupler_flux_guess;
    cal.edge_ns = options.edge_ns;
    cal.g_eff_mhz = resonance.g_eff_mhz;

    const double lambda = units::angular_from_mhz(resonance.lambda_mhz);
    const double cycle_guess = std::max(pi / lambda - options.edge_ns, 0.0);
    const Eigen::VectorXcd psi11 = basis.vectors.col(3);

    struct Trial {
        double plateau = 0.0;
        double leakage = 1.0;
        Eigen::Matrix4cd block;
        Phases phases{};
    };
    // For a plateau detuning (MHz from the static resonance): the plateau
    // length with the best |11> return and the resulting gate.
    const auto trial_at = [&](double delta_mhz) {
        const double f = resonance.mobile_frequency_ghz + 1e-3 * delta_mhz;
        if (!(f > tunable_floor_ghz(mode)) || f > mode.max_frequency_ghz) {
            throw PhysicsError("phase-not-converged",
                               "conditional-phase search left the tunable range of " + plan.mobile);
        }
        cal.mobile_flux = flux_for_frequency(mode, f);
        const auto pieces = pulse_pieces(device, subset, cal, options.evolution);
        const Eigen::VectorXcd risen = pieces.plateau_vectors.adjoint() * (pieces.rise * psi11);
        const Eigen::MatrixXcd readout = basis.vectors.adjoint() * pieces.fall *
                                         pieces.plateau_vectors;
        const auto leakage_at = [&](double t) {
            const Eigen::VectorXcd phases =
                (pieces.plateau_energies.cast<Complex>() * Complex(0.0, -t)).array().exp().matrix();
            const Eigen::Vector4cd comp = readout * phases.cwiseProduct(risen);
            return 1.0 - comp.squaredNorm();
        };
        constexpr int scan = 161;
        const double lo = 0.6 * cycle_guess;
        const double hi = 1.4 * cycle_guess + 1.0;
        double best_t = lo;
        double best = 2.0;
        for (int k = 0; k < scan; ++k) {
            const double t = lo + (hi - lo) * k / (scan - 1);
            const double l = leakage_at(t);
            if (l < best) {
                best = l;
                best_t = t;
            }
        }
        const double step = (hi - lo) / (scan - 1);
        double a = std::max(best_t - step, 0.0);
        double b = best_t + step;
        const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
        double x1 = b - ratio * (b - a);
        double x2 = a + ratio * (b - a);
        double f1 = leakage_at(x1);
        double f2 = leakage_at(x2);
        while (b - a > 1e-7) {
            if (f1 < f2) {
                b = x2;
                x2 = x1;
                f2 = f1;
                x1 = b - ratio * (b - a);
                f1 = leakage_at(x1);
            } else {
                a = x1;
                x1 = x2;
                f1 = f2;
                x2 = a + ratio * (b - a);
                f2 = leakage_at(x2);
            }
        }
        Trial trial;
        trial.plateau = 0.5 * (a + b);
        trial.leakage = leakage_at(trial.plateau);
        const Eigen::MatrixXcd u = pieces.fall * pieces.plateau(trial.plateau) * pieces.rise;
        trial.block = frame_block(basis, u, trial.plateau + 2.0 * options.edge_ns);
        trial.phases = phases_of(trial.block);
        return trial;
    };
    const auto phase_error = [](const Trial& t) { return t.phases.conditional - pi; };

    // Secant on the plateau detuning for a conditional phase of pi.
    double x0 = 0.0;
    Trial t0 = trial_at(x0);
    double x1 = 0.1 * resonance.lambda_mhz;
    Trial t1 = trial_at(x1);
    int iterations = 0;
    while (std::abs(phase_error(t1)) > 1e-2 * options.phase_tolerance &&
           iterations < options.max_iterations) {
        const double e0 = phase_error(t0);
        const double e1 = phase_error(t1);
        if (e1 == e0) {
            break;
        }
        const double limit = 0.5 * resonance.lambda_mhz;
        const double x2 = x1 + std::clamp(-e1 * (x1 - x0) / (e1 - e0), -limit, limit);
        x0 = x1;
        t0 = std::move(t1);
        x1 = x2;
        t1 = trial_at(x1);
        ++iterations;
    }
    cal.duration_ns = t1.plateau + 2.0 * options.edge_ns;
    cal.phase_a = t1.phases.a;
    cal.phase_b = t1.phases.b;
    cal.conditional_phase = t1.phases.conditional;
    cal.leakage = t1.leakage;
    if (std::abs(phase_error(t1)) > options.phase_tolerance) {
        throw PhysicsError("phase-not-converged",
                           "conditional phase " + std::to_string(cal.conditional_phase) +
                               " rad is not within " + std::to_string(options.phase_tolerance) +
                               " of pi");
    }
    if (cal.leakage > options.leakage_threshold) {
        throw PhysicsError("leakage", "leakage " + std::to_string(cal.leakage) +
                                          " exceeds the threshold " +
                                          std::to_string(options.leakage_threshold));
    }
    return cal;
}

Eigen::Matrix4cd ideal_cz() {
    Eigen::Matrix4cd cz = Eigen::Matrix4cd::Identity();
    cz(3, 3) = -1.0;
    return cz;
}

namespace {

void check_calibration(const DeviceSpec& device, const CZCalibration& cal) {
    const auto fail = [](const std::string& what) {
        throw InputError("calibration-mismatch", what);
    };
    for (const auto* id : {&cal.pair.a, &cal.pair.b, &cal.mobile}) {
        if (!device.has_mode(*id)) {
            fail("calibration refers to unknown mode '" + *id + "'");
        }
    }
    if (cal.mobile != cal.pair.a && cal.mobile != cal.pair.b) {
        fail("mobile qubit is not part of the calibrated pair");
    }
    if (std::abs(device.flux_of(cal.mobile, {}) - cal.mobile_idle_flux) > 1e-9) {
        fail("idle flux of " + cal.mobile + " differs from the calibration");
    }
    for (const auto& c : cal.couplers) {
        if (!device.has_mode(c) || std::abs(device.flux_of(c, {}) - cal.coupler_idle_flux) > 1e-9) {
            fail("coupler '" + c + "' does not match the calibration");
        }
    }
    if (!(cal.duration_ns >= 0.0)) {
        fail("negative gate duration");
    }
}

}  // namespace

Eigen::Matrix4cd cz_gate_matrix(const DeviceSpec& device, const CZCalibration& cal,
                                const EvolutionOptions& options) {
    check_calibration(device, cal);
    const auto basis = computational_basis(device, cal.pair);
    const auto u = propagator(device, basis.subset, cz_schedule(cal), options);
    return virtual_z(cal.phase_a, cal.phase_b) * frame_block(basis, u, cal.duration_ns);
}

Eigen::Matrix4cd TwoQubitProcess::apply(const Eigen::Matrix4cd& rho) const {
    Eigen::Matrix<Complex, 16, 1> in;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            in(i * 4 + j) = rho(i, j);
        }
    }
    const Eigen::Matrix<Complex, 16, 1> out = superoperator * in;
    Eigen::Matrix4cd result;
    for (int k = 0; k < 4; ++k) {
        for (int l = 0; l < 4; ++l) {
            result(k, l) = out(k * 4 + l);
        }
    }
    return result;
}

TwoQubitProcess cz_process(const DeviceSpec& device, const CZCalibration& cal,
                           const NoiseSpec& noise, const EvolutionOptions& options,
                           Execution policy) {
    check_calibration(device, cal);
    const auto basis = computational_basis(device, cal.pair);
    const auto schedule = cz_schedule(cal);
    const Eigen::Matrix4cd z = virtual_z(cal.phase_a, cal.phase_b);
    Eigen::Matrix4cd frame = Eigen::Matrix4cd::Zero();
    for (int k = 0; k < 4; ++k) {
        frame(k, k) = std::exp(Complex(0.0, basis.energies(k) * cal.duration_ns));
    }
    const Eigen::Matrix4cd correction = z * frame;

    // 16 physical inputs: |i><i|, (|i>+|j>)/sqrt2 and (|i>+i|j>)/sqrt2.
    struct Input {
        int i;
        int j;
        Complex phase;
    };
    std::vector<Input> inputs;
    for (int i = 0; i < 4; ++i) {
        inputs.push_back({i, i, 1.0});
    }
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            inputs.push_back({i, j, 1.0});
            inputs.push_back({i, j, Complex(0.0, 1.0)});
        }
    }
    std::vector<Eigen::Matrix4cd> outputs(inputs.size());
    for_each_index(inputs.size(), policy, [&](std::size_t n) {
        const auto& in = inputs[n];
        Eigen::VectorXcd psi = basis.vectors.col(in.i);
        if (in.i != in.j) {
            psi = (basis.vectors.col(in.i) + in.phase * basis.vectors.col(in.j)) / std::sqrt(2.0);
        }
        const auto rho = evolve_lindblad(device, schedule, noise,
                                         DensityState::pure({basis.subset, psi}), options);
        outputs[n] = correction * (basis.vectors.adjoint() * rho.matrix * basis.vectors) *
                     correction.adjoint();
    });

    std::array<std::array<Eigen::Matrix4cd, 4>, 4> images;
    for (int i = 0; i < 4; ++i) {
        images[i][i] = outputs[static_cast<std::size_t>(i)];
    }
    std::size_t n = 4;
    for (int i = 0; i < 4; ++i) {
        for (int j = i + 1; j < 4; ++j) {
            const Eigen::Matrix4cd& plus = outputs[n++];
            const Eigen::Matrix4cd& plus_i = outputs[n++];
            const Complex half_one_plus_i(0.5, 0.5);
            // |i><j| = rho_+ + i rho_{+i} - (1+i)/2 (rho_i + rho_j)
            images[i][j] = plus + Complex(0.0, 1.0) * plus_i -
                           half_one_plus_i * (images[i][i] + images[j][j]);
            images[j][i] = images[i][j].adjoint();
        }
    }
    TwoQubitProcess process;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            for (int k = 0; k < 4; ++k) {
                for (int l = 0; l < 4; ++l) {
                    process.superoperator(k * 4 + l, i * 4 + j) = images[i][j](k, l);
                }
            }
        }
    }
    return process;
}

GateFidelity process_fidelity(const TwoQubitProcess& process, const Eigen::Matrix4cd& target) {
    constexpr double d = 4.0;
    Complex overlap = 0.0;
    double leakage = 0.0;
    for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
            Eigen::Matrix4cd unit = Eigen::Matrix4cd::Zero();
            unit(i, j) = 1.0;
            const Eigen::Matrix4cd ideal = target * unit * target.adjoint();
            const Eigen::Matrix4cd actual = process.apply(unit);
            overlap += (ideal.adjoint() * actual).trace();
            if (i == j) {
                leakage += 1.0 - actual.trace().real();
            }
        }
    }
    GateFidelity out;
    out.process_fidelity = overlap.real() / (d * d);
    out.average_fidelity = (d * out.process_fidelity + 1.0) / (d + 1.0);
    out.leakage = leakage / d;
    return out;
}

GateFidelity gate_fidelity(const DeviceSpec& device, const CZCalibration& calibration,
                           const NoiseSpec& noise, const EvolutionOptions& options,
                           Execution policy) {
    return process_fidelity(cz_process(device, calibration, noise, options, policy), ideal_cz());
}

double coherence_limited_fidelity(const DeviceSpec& device, const CZCalibration& cal,
                                  const NoiseSpec& noise, const EvolutionOptions& options) {
    check_calibration(device, cal);
    const auto basis = computational_basis(device, cal.pair);
    const auto& subset = basis.subset;
    constexpr double d = 4.0;

    struct Jump {
        Eigen::MatrixXcd op;
    };
    std::vector<Jump> jumps;
    for (std::size_t k = 0; k < subset.size(); ++k) {
        const auto& id = subset.ids()[k];
        if (const double g1 = noise.gamma1(id); g1 > 0.0) {
            jumps.push_back({std::sqrt(g1) * lowering_operator(subset, k)});
        }
        if (const double gphi = noise.gamma_phi(id); gphi > 0.0) {
            const Eigen::VectorXd n = subset.number_diagonal(k);
            jumps.push_back({(std::sqrt(gphi / 2.0) * 2.0 * n).cast<Complex>().asDiagonal()});
        }
    }

    const auto integrand = [&](const Eigen::MatrixXcd& u) {
        const Eigen::MatrixXcd ub = u * basis.vectors;
        double total = 0.0;
        for (const auto& jump : jumps) {
            const Eigen::MatrixXcd lub = jump.op * ub;
            const Complex tr = (ub.adjoint() * lub).trace();
            total += lub.squaredNorm() / d - std::norm(tr) / (d * d);
        }
        return total;
    };

    double entanglement_error = 0.0;
    double last_t = 0.0;
    double last_value = integrand(Eigen::MatrixXcd::Identity(subset.dimension(), subset.dimension()));
    if (cal.duration_ns > 0.0) {
        propagator(device, subset, cz_schedule(cal), options,
                   [&](double t, const Eigen::MatrixXcd& u) {
                       const double value = integrand(u);
                       entanglement_error += 0.5 * (value + last_value) * (t - last_t);
                       last_t = t;
                       last_value = value;
                   });
    }

    const Eigen::Matrix4cd m = cz_gate_matrix(device, cal, options);
    const Eigen::Matrix4cd cz = ideal_cz();
    const double noiseless =
        ((m.adjoint() * m).trace().real() + std::norm((cz.adjoint() * m).trace())) / (d * (d + 1.0));
    return noiseless - d / (d + 1.0) * entanglement_error;
}

nlohmann::json CZCalibration::to_json() const {
    return {{"pair", {pair.a, pair.b}},
            {"mobile", mobile},
            {"doubled", doubled},
            {"couplers", couplers},
            {"mobile_idle_flux", mobile_idle_flux},
            {"mobile_flux", mobile_flux},
            {"coupler_idle_flux", coupler_idle_flux},
            {"coupler_flux", coupler_flux},
            {"duration_ns", duration_ns},
            {"edge_ns", edge_ns},
            {"phase_a_rad", phase_a},
            {"phase_b_rad", phase_b},
            {"conditional_phase_rad", conditional_phase},
            {"leakage", leakage},
            {"g_eff_mhz", g_eff_mhz}};
}

CZCalibration CZCalibration::from_json(const nlohmann::json& doc) {
    try {
        CZCalibration cal;
        const auto pair = doc.at("pair").get<std::vector<std::string>>();
        if (pair.size() != 2) {
            throw InputError("schema", "calibration pair must list two qubits");
        }
        cal.pair = {pair[0], pair[1]};
        cal.mobile = doc.at("mobile").get<std::string>();
        cal.doubled = doc.at("doubled").get<std::string>();
        cal.couplers = doc.at("couplers").get<std::vector<std::string>>();
        cal.mobile_idle_flux = doc.at("mobile_idle_flux").get<double>();
        cal.mobile_flux = doc.at("mobile_flux").get<double>();
        cal.coupler_idle_flux = doc.at("coupler_idle_flux").get<double>();
        cal.coupler_flux = doc.at("coupler_flux").get<double>();
        cal.duration_ns = doc.at("duration_ns").get<double>();
        cal.edge_ns = doc.at("edge_ns").get<double>();
        cal.phase_a = doc.at("phase_a_rad").get<double>();
        cal.phase_b = doc.at("phase_b_rad").get<double>();
        cal.conditional_phase = doc.at("conditional_phase_rad").get<double>();
        cal.leakage = doc.at("leakage").get<double>();
        cal.g_eff_mhz = doc.at("g_eff_mhz").get<double>();
        return cal;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("schema", std::string("calibration document: ") + e.what());
    }
}

}  // namespace stq
