#include "stq/wstate.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Eigenvalues>

#include "stq/errors.hpp"
#include "stq/hilbert.hpp"

namespace stq {

namespace {

using Complex = std::complex<double>;

std::string branch_coupler(const DeviceSpec& device, const std::string& center,
                           const std::string& target) {
    for (const auto& c : device.couplers_between(center, target)) {
        if (device.mode(c).flux_tunable) {
            return c;
        }
    }
    throw InputError("no-tunable-coupler",
                     center + " and " + target + " share no flux-tunable coupler");
}

// Golden-section maximum of f on [a, b].
template <typename F>
double golden_max(F&& f, double a, double b, double tolerance) {
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - ratio * (b - a);
    double x2 = a + ratio * (b - a);
    double f1 = f(x1);
    double f2 = f(x2);
    while (b - a > tolerance) {
        if (f1 > f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = f(x2);
        }
    }
    return 0.5 * (a + b);
}

}  // namespace

BranchCoupling measure_branch(const DeviceSpec& device, const std::string& center,
                              const std::string& target, double coupler_flux) {
    const QubitPair pair{center, target};
    BranchCoupling branch;
    branch.target = target;
    branch.coupler = branch_coupler(device, center, target);
    branch.coupler_flux = coupler_flux;

    EffectiveCouplingOptions options;
    options.swept = target;
    const auto crossing =
        effective_coupling(device, pair, coupler_flux, CouplingMethod::splitting, options);
    branch.splitting_mhz = crossing.g_mhz;
    branch.target_flux = crossing.swept_flux;
    if (std::abs(crossing.g_mhz) < 1e-4) {
        throw PhysicsError("no-coupling", "branch " + center + "-" + target + " is uncoupled at flux " +
                                              std::to_string(coupler_flux));
    }

    const auto subset = pair_subset(device, pair);
    const auto idle_bias = with_pair_coupler_flux(device, pair, coupler_flux, device.idle_bias());
    const auto idle = eigensystem(build_hamiltonian(device, subset, idle_bias), subset, 1);
    const Eigen::VectorXcd start = idle.vector(subset.excite({{center, 1}}));
    const Eigen::VectorXcd readout = idle.vector(subset.excite({{target, 1}}));

    FluxBias resonant = idle_bias;
    resonant.set(target, crossing.swept_flux);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(
        build_hamiltonian(device, subset, resonant).matrix);
    const Eigen::VectorXcd c0 = solver.eigenvectors().adjoint() * start;
    const Eigen::VectorXcd cr = solver.eigenvectors().adjoint() * readout;
    const auto population = [&](double t) {
        Complex amp = 0.0;
        for (Eigen::Index e = 0; e < c0.size(); ++e) {
            amp += std::conj(cr(e)) * c0(e) * std::exp(Complex(0.0, -solver.eigenvalues()(e) * t));
        }
        return std::norm(amp);
    };

    // First swap maximum near 1/(4 g).
    const double expected = 1e3 / (4.0 * std::abs(crossing.g_mhz));
    constexpr int samples = 400;
    const double span = 2.0 * expected;
    std::vector<double> trace(samples + 1);
    for (int k = 0; k <= samples; ++k) {
        trace[k] = population(span * k / samples);
    }
    const double peak = *std::max_element(trace.begin(), trace.end());
    int first = -1;
    for (int k = 1; k < samples; ++k) {
        if (trace[k] >= trace[k - 1] && trace[k] >= trace[k + 1] && trace[k] > 0.5 * peak) {
            first = k;
            break;
        }
    }
    if (first < 0) {
        throw PhysicsError("no-oscillation", "no swap maximum in the " + center + "-" + target +
                                                 " vacuum-Rabi trace");
    }
    const double step = span / samples;
    const double t_max = golden_max(population, (first - 1) * step, (first + 1) * step, 1e-9);
    branch.g_mhz = std::copysign(1e3 / (4.0 * t_max), crossing.g_mhz);
    return branch;
}

Equalization equalize_couplings(const DeviceSpec& device, const std::string& center,
                                const std::vector<std::string>& targets,
                                const EqualizeOptions& options) {
    if (targets.empty()) {
        throw InputError("no-targets", "equalize_couplings needs at least one target");
    }
    Equalization out;
    std::vector<double> start(targets.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const auto coupler = branch_coupler(device, center, targets[i]);
        start[i] = options.start.contains(coupler) ? options.start.at(coupler)
                                                   : device.flux_of(coupler, {});
    }
    const auto measure = [&](std::size_t i, double flux) {
        try {
            return measure_branch(device, center, targets[i], flux);
        } catch (const PhysicsError& e) {
            throw PhysicsError("coupling-unreachable",
                               "branch " + center + "-" + targets[i] + ": " + e.what());
        }
    };
    for (std::size_t i = 0; i < targets.size(); ++i) {
        out.branches.push_back(measure(i, start[i]));
    }
    if (options.target_mhz) {
        out.target_mhz = *options.target_mhz;
    } else {
        const auto slowest = std::min_element(
            out.branches.begin(), out.branches.end(),
            [](const BranchCoupling& x, const BranchCoupling& y) { return std::abs(x.g_mhz) < std::abs(y.g_mhz); });
        out.target_mhz = slowest->g_mhz;
    }
    const double target = out.target_mhz;
    const double accept = 0.2 * options.tolerance * std::abs(target);

    constexpr double flux_max = 0.499;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        auto& branch = out.branches[i];
        double x0 = start[i];
        double r0 = branch.g_mhz - target;
        if (std::abs(r0) <= accept) {
            continue;
        }
        double x1 = std::clamp(x0 + 0.005, 0.0, flux_max);
        auto b1 = measure(i, x1);
        double r1 = b1.g_mhz - target;
        int iterations = 0;
        while (std::abs(r1) > accept) {
            if (++iterations > options.max_iterations || r1 == r0) {
                throw PhysicsError("coupling-unreachable",
                                   "branch " + center + "-" + targets[i] + " cannot reach " +
                                       std::to_string(target) + " MHz");
            }
            const double step = std::clamp(-r1 * (x1 - x0) / (r1 - r0), -0.03, 0.03);
            const double x2 = std::clamp(x1 + step, 0.0, flux_max);
            if (x2 == x1) {
                throw PhysicsError("coupling-unreachable",
                                   "branch " + center + "-" + targets[i] +
                                       " hits the end of its flux range");
            }
            x0 = x1;
            r0 = r1;
            x1 = x2;
            b1 = measure(i, x1);
            r1 = b1.g_mhz - target;
        }
        branch = b1;
    }
    for (const auto& branch : out.branches) {
        out.fluxes.set(branch.coupler, branch.coupler_flux);
    }
    return out;
}

WStateTrace star_evolution(const DeviceSpec& device, const std::string& center,
                           const std::vector<std::string>& targets,
                           const std::vector<double>& couplings_mhz,
                           const std::vector<double>& times_ns) {
    if (targets.size() != couplings_mhz.size() || targets.empty()) {
        throw InputError("bad-targets", "one coupling per target is required");
    }
    if (times_ns.empty()) {
        throw InputError("empty-grid", "time grid must not be empty");
    }
    std::vector<std::string> order{center};
    order.insert(order.end(), targets.begin(), targets.end());
    std::sort(order.begin(), order.end(), [&](const std::string& x, const std::string& y) {
        return device.mode_index(x) < device.mode_index(y);
    });
    if (std::adjacent_find(order.begin(), order.end()) != order.end()) {
        throw InputError("bad-targets", "center and targets must be distinct");
    }

    // Resonant exchange model: every mode at the center's frequency.
    const double f = device.frequency_ghz(center, {});
    std::vector<ModeSpec> modes;
    for (const auto& id : order) {
        const auto& m = device.mode(id);
        modes.push_back({id, ModeKind::qubit, f, m.anharmonicity_ghz, 3, false, 0.0});
    }
    std::vector<CouplingSpec> edges;
    for (std::size_t i = 0; i < targets.size(); ++i) {
        edges.push_back({center, targets[i], 1e-3 * couplings_mhz[i], CouplingScaling::fixed});
    }
    const DeviceSpec model(modes, edges);
    const ModeSubset subset(model, order);
    const auto h = build_hamiltonian(model, subset, {}, CouplingForm::rotating_wave);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.matrix);

    const auto ket_of = [&](const std::string& id) {
        Eigen::VectorXcd ket = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(subset.dimension()));
        const auto occupation = subset.excite({{id, 1}});
        ket(static_cast<Eigen::Index>(subset.index_of(occupation))) = 1.0;
        return ket;
    };
    const Eigen::VectorXcd c0 = solver.eigenvectors().adjoint() * ket_of(center);
    std::vector<Eigen::VectorXcd> readouts;
    Eigen::VectorXcd w = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(subset.dimension()));
    for (const auto& id : order) {
        const Eigen::VectorXcd ket = ket_of(id);
        readouts.push_back(solver.eigenvectors().adjoint() * ket);
        if (id != center) {
            w += ket;
        }
    }
    w /= std::sqrt(static_cast<double>(targets.size()));
    const Eigen::VectorXcd cw = solver.eigenvectors().adjoint() * w;

    const auto evolve = [&](double t) {
        const Eigen::VectorXcd phases =
            (solver.eigenvalues().cast<Complex>() * Complex(0.0, -t)).array().exp().matrix();
        return Eigen::VectorXcd(phases.cwiseProduct(c0));
    };
    const auto fidelity = [&](double t) { return std::norm(cw.dot(evolve(t))); };

    WStateTrace trace;
    trace.order = order;
    trace.center = center;
    trace.targets = targets;
    trace.couplings_mhz = couplings_mhz;
    trace.times_ns = times_ns;
    trace.populations.assign(order.size(), std::vector<double>(times_ns.size()));
    trace.w_fidelity.resize(times_ns.size());
    for (std::size_t j = 0; j < times_ns.size(); ++j) {
        const auto psi = evolve(times_ns[j]);
        for (std::size_t k = 0; k < order.size(); ++k) {
            trace.populations[k][j] = std::norm(readouts[k].dot(psi));
        }
        trace.w_fidelity[j] = fidelity(times_ns[j]);
    }
    const auto best = static_cast<std::size_t>(
        std::max_element(trace.w_fidelity.begin(), trace.w_fidelity.end()) - trace.w_fidelity.begin());
    trace.t_star_ns = times_ns[best];
    trace.max_w_fidelity = trace.w_fidelity[best];
    if (best > 0 && best + 1 < times_ns.size()) {
        const double t = golden_max(fidelity, times_ns[best - 1], times_ns[best + 1], 1e-9);
        if (fidelity(t) >= trace.max_w_fidelity) {
            trace.t_star_ns = t;
            trace.max_w_fidelity = fidelity(t);
        }
    }
    return trace;
}

WStateTrace wstate_evolution(const DeviceSpec& device, const std::string& center,
                             const std::vector<std::string>& targets,
                             const FluxBias& equalized_fluxes, const std::vector<double>& times_ns,
                             const WStateOptions& options) {
    std::vector<double> couplings;
    for (const auto& target : targets) {
        const auto coupler = branch_coupler(device, center, target);
        const double flux = equalized_fluxes.contains(coupler) ? equalized_fluxes.at(coupler)
                                                               : device.flux_of(coupler, {});
        couplings.push_back(measure_branch(device, center, target, flux).g_mhz);
    }
    if (options.check_equalization) {
        const auto [lo, hi] = std::minmax_element(
            couplings.begin(), couplings.end(),
            [](double x, double y) { return std::abs(x) < std::abs(y); });
        const bool mixed_signs = std::any_of(couplings.begin(), couplings.end(), [&](double g) {
            return (g > 0.0) != (couplings.front() > 0.0);
        });
        if (mixed_signs || std::abs(*hi) - std::abs(*lo) > options.equalization_tolerance * std::abs(*hi)) {
            throw PhysicsError("couplings-not-equalized",
                               "branch couplings span " + std::to_string(*lo) + " to " +
                                   std::to_string(*hi) + " MHz");
        }
    }
    return star_evolution(device, center, targets, couplings, times_ns);
}

}  // namespace stq
