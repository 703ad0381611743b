#include "stq/statics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "stq/errors.hpp"
#include "stq/units.hpp"

namespace stq {

namespace {

constexpr double ambiguous_overlap = 0.5;

void require_qubits(const DeviceSpec& device, const QubitPair& pair) {
    for (const auto* id : {&pair.a, &pair.b}) {
        if (device.mode(*id).is_coupler()) {
            throw InputError("not-a-qubit", "'" + *id + "' is a coupler, expected a qubit");
        }
    }
    if (pair.a == pair.b) {
        throw InputError("bad-pair", "pair needs two distinct qubits");
    }
}

struct Splitting {
    double splitting = 0.0;  // rad/ns
    double sign = 1.0;
};

// Energy gap between the two eigenvectors with the most weight on the bare
// states `first` and `second`; the sign is read off the relative phase of
// the lower one (symmetric lower => negative coupling).
Splitting gap_between(const DeviceSpec& device, const ModeSubset& subset, const FluxBias& bias,
                      const Occupation& first, const Occupation& second) {
    const auto h = build_hamiltonian(device, subset, bias);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(h.matrix);
    const auto& vecs = solver.eigenvectors();
    const auto& vals = solver.eigenvalues();
    const auto ia = static_cast<Eigen::Index>(subset.index_of(first));
    const auto ib = static_cast<Eigen::Index>(subset.index_of(second));

    Eigen::Index top = -1;
    Eigen::Index runner = -1;
    double w_top = -1.0;
    double w_runner = -1.0;
    for (Eigen::Index e = 0; e < vecs.cols(); ++e) {
        const double w = std::norm(vecs(ia, e)) + std::norm(vecs(ib, e));
        if (w > w_top) {
            runner = top;
            w_runner = w_top;
            top = e;
            w_top = w;
        } else if (w > w_runner) {
            runner = e;
            w_runner = w;
        }
    }
    const Eigen::Index lower = vals(top) < vals(runner) ? top : runner;
    const double relative = std::real(vecs(ia, lower) * std::conj(vecs(ib, lower)));
    return {std::abs(vals(top) - vals(runner)), relative > 0.0 ? -1.0 : 1.0};
}

}  // namespace

ModeSubset pair_subset(const DeviceSpec& device, const QubitPair& pair) {
    require_qubits(device, pair);
    auto couplers = device.couplers_between(pair.a, pair.b);
    if (couplers.empty() && !device.direct_coupling(pair.a, pair.b)) {
        throw InputError("not-connected", "qubits " + pair.a + " and " + pair.b +
                                              " share no coupling");
    }
    std::vector<std::string> ids{pair.a};
    ids.insert(ids.end(), couplers.begin(), couplers.end());
    ids.push_back(pair.b);
    return ModeSubset(device, std::move(ids));
}

FluxBias with_pair_coupler_flux(const DeviceSpec& device, const QubitPair& pair,
                                double coupler_flux, FluxBias bias) {
    for (const auto& c : device.couplers_between(pair.a, pair.b)) {
        if (device.mode(c).flux_tunable) {
            bias.set(c, coupler_flux);
        }
    }
    return bias;
}

double zz_shift_mhz(const DeviceSpec& device, const QubitPair& pair, double coupler_flux,
                    const FluxBias& bias) {
    const auto subset = pair_subset(device, pair);
    const auto full_bias = with_pair_coupler_flux(device, pair, coupler_flux, bias);
    const auto spectrum = eigensystem(build_hamiltonian(device, subset, full_bias), subset, 2);

    const Occupation n00 = subset.excite({});
    const Occupation n10 = subset.excite({{pair.a, 1}});
    const Occupation n01 = subset.excite({{pair.b, 1}});
    const Occupation n11 = subset.excite({{pair.a, 1}, {pair.b, 1}});
    for (const auto* n : {&n00, &n10, &n01, &n11}) {
        if (spectrum.overlap(*n) < ambiguous_overlap) {
            throw PhysicsError("near-resonance",
                               "ambiguous dressed-state labels for " + pair.a + "-" + pair.b +
                                   " at coupler flux " + std::to_string(coupler_flux));
        }
    }
    const double zeta = spectrum.energy(n11) - spectrum.energy(n10) - spectrum.energy(n01) +
                        spectrum.energy(n00);
    return units::mhz(zeta);
}

std::vector<ZZResult> zz_scan(const DeviceSpec& device, const QubitPair& pair,
                              const std::vector<double>& flux_grid, Execution policy) {
    if (flux_grid.empty()) {
        throw InputError("empty-grid", "flux grid must not be empty");
    }
    pair_subset(device, pair);
    std::vector<ZZResult> out(flux_grid.size());
    for_each_index(flux_grid.size(), policy, [&](std::size_t i) {
        ZZResult r{pair, flux_grid[i], 0.0, false};
        try {
            r.zeta_mhz = zz_shift_mhz(device, pair, flux_grid[i]);
        } catch (const PhysicsError& e) {
            if (e.code() != "near-resonance") {
                throw;
            }
            r.zeta_mhz = std::numeric_limits<double>::quiet_NaN();
            r.ambiguous = true;
        }
        out[i] = r;
    });
    return out;
}

ZZZero find_zz_zero(const DeviceSpec& device, const QubitPair& pair, double lo, double hi,
                    double tolerance_khz, int max_evaluations) {
    if (!(lo < hi)) {
        throw InputError("inverted-bracket", "flux bracket must satisfy lo < hi");
    }
    const double tol = tolerance_khz * 1e-3;  // MHz
    int evaluations = 0;
    const auto zeta = [&](double flux) {
        ++evaluations;
        return zz_shift_mhz(device, pair, flux);
    };

    double f_lo = zeta(lo);
    double f_hi = zeta(hi);
    constexpr double identically_zero = 1e-9;  // MHz
    if (std::abs(f_lo) < identically_zero && std::abs(f_hi) < identically_zero) {
        const double mid = 0.5 * (lo + hi);
        return {mid, zeta(mid), evaluations, true};
    }
    if (std::abs(f_lo) < tol) {
        return {lo, f_lo, evaluations, false};
    }
    if (std::abs(f_hi) < tol) {
        return {hi, f_hi, evaluations, false};
    }
    if ((f_lo > 0.0) == (f_hi > 0.0)) {
        throw PhysicsError("no-sign-change", "zeta has the same sign at both ends of [" +
                                                 std::to_string(lo) + ", " + std::to_string(hi) +
                                                 "]");
    }

    // Illinois regula falsi; falls back to bisection whenever an update fails
    // to at least halve the bracket.
    int stale_side = 0;
    while (evaluations < max_evaluations) {
        const double width = hi - lo;
        double x = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        if (!(x > lo && x < hi) || !std::isfinite(x)) {
            x = 0.5 * (lo + hi);
        }
        const double fx = zeta(x);
        if (std::abs(fx) < tol) {
            return {x, fx, evaluations, false};
        }
        if ((fx > 0.0) == (f_lo > 0.0)) {
            lo = x;
            f_lo = fx;
            if (stale_side == -1) {
                f_hi *= 0.5;
            }
            stale_side = -1;
        } else {
            hi = x;
            f_hi = fx;
            if (stale_side == 1) {
                f_lo *= 0.5;
            }
            stale_side = 1;
        }
        if (hi - lo > 0.5 * width && evaluations < max_evaluations) {
            const double mid = 0.5 * (lo + hi);
            const double fm = zeta(mid);
            if (std::abs(fm) < tol) {
                return {mid, fm, evaluations, false};
            }
            if ((fm > 0.0) == (f_lo > 0.0)) {
                lo = mid;
                f_lo = fm;
            } else {
                hi = mid;
                f_hi = fm;
            }
            stale_side = 0;
        }
        if (hi - lo < 1e-13) {
            break;
        }
    }
    throw PhysicsError("no-convergence",
                       "zeta root not resolved to " + std::to_string(tolerance_khz) +
                           " kHz within " + std::to_string(evaluations) +
                           " evaluations (bracket collapsed onto [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "], likely a resonance pole)");
}

EffectiveCoupling effective_coupling(const DeviceSpec& device, const QubitPair& pair,
                                     double coupler_flux, CouplingMethod method,
                                     const EffectiveCouplingOptions& options) {
    const auto subset = pair_subset(device, pair);
    const auto bias = with_pair_coupler_flux(device, pair, coupler_flux, options.bias);
    const auto couplers = device.couplers_between(pair.a, pair.b);

    if (method == CouplingMethod::perturbative) {
        const double wa = device.frequency_ghz(pair.a, bias);
        const double wb = device.frequency_ghz(pair.b, bias);
        double g = 0.0;
        if (const auto direct = device.direct_coupling(pair.a, pair.b)) {
            g += device.coupling_ghz(*direct, bias);
        }
        for (const auto& c : couplers) {
            const double wc = device.frequency_ghz(c, bias);
            const double gac = device.coupling_ghz(*device.coupling_between(pair.a, c), bias);
            const double gbc = device.coupling_ghz(*device.coupling_between(pair.b, c), bias);
            const double da = wa - wc;
            const double db = wb - wc;
            if (std::abs(da) < 5.0 * std::abs(gac) || std::abs(db) < 5.0 * std::abs(gbc)) {
                throw PhysicsError("perturbative-invalid",
                                   "coupler " + c + " is within 5 g of a qubit; dispersive "
                                   "formula does not apply");
            }
            g += 0.5 * gac * gbc * (1.0 / da + 1.0 / db);
            if (options.counter_rotating) {
                g -= 0.5 * gac * gbc * (1.0 / (wa + wc) + 1.0 / (wb + wc));
            }
        }
        return {1e3 * g, wa, device.flux_of(pair.a, bias)};
    }

    std::string swept;
    if (options.swept) {
        swept = *options.swept;
        if (swept != pair.a && swept != pair.b) {
            throw InputError("bad-swept-qubit", "swept qubit must belong to the pair");
        }
        if (!device.mode(swept).flux_tunable) {
            throw InputError("fixed-frequency-mode", "swept qubit " + swept + " is not tunable");
        }
    } else {
        const bool ta = device.mode(pair.a).flux_tunable;
        const bool tb = device.mode(pair.b).flux_tunable;
        if (!ta && !tb) {
            throw InputError("fixed-frequency-mode",
                             "splitting method needs a flux-tunable qubit in the pair");
        }
        if (ta && tb) {
            swept = device.frequency_ghz(pair.a, bias) >= device.frequency_ghz(pair.b, bias)
                        ? pair.a
                        : pair.b;
        } else {
            swept = ta ? pair.a : pair.b;
        }
    }
    const std::string& fixed = swept == pair.a ? pair.b : pair.a;
    const auto& swept_mode = device.mode(swept);
    const double f_fixed = device.frequency_ghz(fixed, bias);
    const double f_min = swept_mode.max_frequency_ghz * std::sqrt(swept_mode.junction_asymmetry);
    const double lo = std::max(f_fixed - options.window_ghz, f_min + 1e-9);
    const double hi = std::min(f_fixed + options.window_ghz, swept_mode.max_frequency_ghz);
    if (!(lo < hi)) {
        throw PhysicsError("not-near-resonant",
                           swept + " cannot be tuned near " + fixed + " in the sweep window");
    }

    const auto crossing = find_avoided_crossing(device, subset, swept, bias,
                                                subset.excite({{pair.a, 1}}),
                                                subset.excite({{pair.b, 1}}), lo, hi);
    return {crossing.sign * 0.5 * crossing.gap_mhz, crossing.frequency_ghz, crossing.flux};
}

AvoidedCrossing find_avoided_crossing(const DeviceSpec& device, const ModeSubset& subset,
                                      const std::string& swept, const FluxBias& bias,
                                      const Occupation& first, const Occupation& second,
                                      double lo_ghz, double hi_ghz) {
    const auto& swept_mode = device.mode(swept);
    if (!swept_mode.flux_tunable) {
        throw InputError("fixed-frequency-mode", "swept mode " + swept + " is not tunable");
    }
    if (!(lo_ghz < hi_ghz)) {
        throw PhysicsError("not-near-resonant", swept + " has an empty sweep window");
    }
    const auto gap_at = [&](double f) {
        FluxBias b = bias;
        b.set(swept, flux_for_frequency(swept_mode, f));
        return gap_between(device, subset, b, first, second);
    };

    constexpr int coarse = 61;
    std::vector<double> grid(coarse);
    std::vector<double> values(coarse);
    for (int i = 0; i < coarse; ++i) {
        grid[i] = lo_ghz + (hi_ghz - lo_ghz) * i / (coarse - 1);
        values[i] = gap_at(grid[i]).splitting;
    }
    const auto best = static_cast<int>(std::min_element(values.begin(), values.end()) -
                                       values.begin());
    if (best == 0 || best == coarse - 1) {
        throw PhysicsError("not-near-resonant", "no avoided crossing while sweeping " + swept +
                                                    " inside the window");
    }

    double a = grid[best - 1];
    double b = grid[best + 1];
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - ratio * (b - a);
    double x2 = a + ratio * (b - a);
    double f1 = gap_at(x1).splitting;
    double f2 = gap_at(x2).splitting;
    while (b - a > 1e-10) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - ratio * (b - a);
            f1 = gap_at(x1).splitting;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + ratio * (b - a);
            f2 = gap_at(x2).splitting;
        }
    }
    const double f_min = 0.5 * (a + b);
    const auto s = gap_at(f_min);
    return {f_min, flux_for_frequency(swept_mode, f_min), units::mhz(s.splitting), s.sign};
}

double coupler_flux_for_coupling(const DeviceSpec& device, const QubitPair& pair,
                                 double target_mhz, double start_flux,
                                 const EffectiveCouplingOptions& options) {
    const auto couplers = device.couplers_between(pair.a, pair.b);
    if (couplers.empty() || !device.mode(couplers.front()).flux_tunable) {
        throw InputError("no-tunable-coupler", "pair " + pair.a + "-" + pair.b +
                                                   " has no tunable coupler");
    }
    constexpr double flux_max = 0.499;
    const auto residual = [&](double flux) {
        return effective_coupling(device, pair, flux, CouplingMethod::splitting, options).g_mhz -
               target_mhz;
    };
    double x0 = std::clamp(start_flux, 0.0, flux_max);
    double x1 = std::clamp(x0 + (x0 + 0.01 <= flux_max ? 0.01 : -0.01), 0.0, flux_max);
    double r0 = residual(x0);
    double r1 = residual(x1);
    const double tol = 1e-4 * std::max(1.0, std::abs(target_mhz));
    for (int iter = 0; iter < 60; ++iter) {
        if (std::abs(r1) < tol) {
            return x1;
        }
        if (r1 == r0) {
            break;
        }
        double step = -r1 * (x1 - x0) / (r1 - r0);
        step = std::clamp(step, -0.05, 0.05);
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
                       "coupler of " + pair.a + "-" + pair.b + " cannot reach " +
                           std::to_string(target_mhz) + " MHz within its flux range");
}

SpectrumCurve coupler_spectrum_scan(const DeviceSpec& device, const std::string& coupler,
                                    const std::vector<double>& flux_grid, Execution policy) {
    const auto& mode = device.mode(coupler);
    if (!mode.is_coupler() || !mode.flux_tunable) {
        throw InputError("not-a-tunable-coupler", "'" + coupler + "' is not a tunable coupler");
    }
    if (flux_grid.empty()) {
        throw InputError("empty-grid", "flux grid must not be empty");
    }
    for (std::size_t i = 1; i < flux_grid.size(); ++i) {
        if (!(flux_grid[i] > flux_grid[i - 1])) {
            throw InputError("grid-not-increasing", "flux grid must be strictly increasing");
        }
    }
    std::vector<std::string> ids;
    for (const auto& c : device.couplings()) {
        if (c.touches(coupler) && !device.mode(c.other(coupler)).is_coupler()) {
            ids.push_back(c.other(coupler));
        }
    }
    ids.insert(ids.begin() + 1, coupler);
    const ModeSubset subset(device, ids);
    const Occupation ground = subset.excite({});
    const Occupation excited = subset.excite({{coupler, 1}});

    std::vector<std::optional<double>> values(flux_grid.size());
    for_each_index(flux_grid.size(), policy, [&](std::size_t i) {
        FluxBias bias;
        bias.set(coupler, flux_grid[i]);
        const auto spectrum = eigensystem(build_hamiltonian(device, subset, bias), subset, 1);
        if (spectrum.overlap(excited) < ambiguous_overlap ||
            spectrum.overlap(ground) < ambiguous_overlap) {
            return;
        }
        values[i] = units::ghz(spectrum.energy(excited) - spectrum.energy(ground));
    });

    SpectrumCurve curve{coupler, {}, {}};
    for (std::size_t i = 0; i < flux_grid.size(); ++i) {
        if (values[i]) {
            curve.samples.push_back({flux_grid[i], *values[i]});
        } else {
            curve.omitted_fluxes.push_back(flux_grid[i]);
        }
    }
    return curve;
}

}  // namespace stq
