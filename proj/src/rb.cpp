#include "stq/rb.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numeric>
#include <random>

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/NonLinearOptimization>

#include "stq/errors.hpp"
#include "stq/seeding.hpp"
#include "stq/units.hpp"

namespace stq {

namespace {

using Complex = std::complex<double>;

constexpr std::uint64_t rb_stream = stream_key("rb");
constexpr std::uint64_t bootstrap_stream = stream_key("bootstrap");

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
    if (v.size() < 2) {
        return 0.0;
    }
    const double m = mean_of(v);
    double s = 0.0;
    for (const double x : v) {
        s += (x - m) * (x - m);
    }
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

void apply_unitary(Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& u) {
    rho = u * rho * u.adjoint();
}

void apply_channel(Eigen::MatrixXcd& rho, const Eigen::MatrixXcd& superoperator) {
    rho = unvectorize(superoperator * vectorize(rho), static_cast<int>(rho.rows()));
}

Eigen::Matrix4cd kron2(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    return Eigen::kroneckerProduct(a, b).eval();
}

Eigen::MatrixXcd ground(int d) {
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
    rho(0, 0) = 1.0;
    return rho;
}

void check_options(const RBOptions& options) {
    const auto& m = options.lengths;
    if (m.size() < 3 || !std::is_sorted(m.begin(), m.end()) ||
        std::adjacent_find(m.begin(), m.end()) != m.end() || m.front() < 1) {
        throw InputError("bad-lengths", "RB needs at least 3 distinct ascending lengths >= 1");
    }
    if (options.sequences_per_length < 10) {
        throw InputError("too-few-sequences", "RB fitting needs at least 10 sequences per length");
    }
}

void check_gates(const GateSet& gates) {
    if (gates.qubits != 1 && gates.qubits != 2) {
        throw InputError("unsupported-arity", "RB supports 1 or 2 qubits");
    }
    if (gates.clifford_noise) {
        if (gates.clifford_noise->qubits != gates.qubits) {
            throw InputError("arity-mismatch", "Clifford noise must act on the benchmarked qubits");
        }
        require_cptp(*gates.clifford_noise, 1e-8);
    }
    if (gates.cz) {
        if (gates.cz->qubits != 2) {
            throw InputError("arity-mismatch", "CZ channel must act on two qubits");
        }
        require_cptp(*gates.cz, 1e-8, true);
    }
}

// One Clifford (ideal layers, CZ layers possibly physical) applied to rho.
class CliffordApplier {
public:
    explicit CliffordApplier(const GateSet& gates) : gates_(gates) {}

    void single(Eigen::MatrixXcd& rho, int index) const {
        apply_unitary(rho, single_qubit_cliffords()[index]);
        noise(rho);
    }

    void two(Eigen::MatrixXcd& rho, const TwoQubitClifford& c) const {
        const auto& c1 = single_qubit_cliffords();
        for (const auto& layer : c.layers()) {
            if (layer.kind == CliffordLayer::Kind::local) {
                apply_unitary(rho, kron2(c1[layer.a], c1[layer.b]));
            } else if (gates_.cz) {
                apply_channel(rho, gates_.cz->superoperator);
            } else {
                Eigen::Matrix4cd cz = Eigen::Matrix4cd::Identity();
                cz(3, 3) = -1.0;
                apply_unitary(rho, cz);
            }
        }
        noise(rho);
    }

private:
    void noise(Eigen::MatrixXcd& rho) const {
        if (gates_.clifford_noise) {
            apply_channel(rho, gates_.clifford_noise->superoperator);
        }
    }

    const GateSet& gates_;
};

// Survival of one sequence; `target` is interleaved after every Clifford.
double sequence_survival(const GateSet& gates, const GateChannel* target, int length,
                         std::uint64_t seed) {
    const auto seq = sample_clifford_sequence(gates.qubits, length, seed);
    const CliffordApplier apply(gates);
    const int d = 1 << gates.qubits;
    Eigen::MatrixXcd rho = ground(d);
    Eigen::MatrixXcd total = Eigen::MatrixXcd::Identity(d, d);
    for (int k = 0; k < length; ++k) {
        if (gates.qubits == 1) {
            apply.single(rho, seq.single[k]);
            total = single_qubit_cliffords()[seq.single[k]] * total;
        } else {
            apply.two(rho, seq.two[k]);
            total = seq.two[k].unitary() * total;
        }
        if (target) {
            apply_channel(rho, target->superoperator);
            total = target->ideal * total;
        }
    }
    if (gates.qubits == 1) {
        const int inverse = target ? find_single_qubit_clifford(total.adjoint()) : seq.single_inverse;
        if (inverse < 0) {
            throw InputError("target-not-clifford", "interleaved gate " + target->label + " is not a Clifford");
        }
        apply.single(rho, inverse);
    } else {
        TwoQubitClifford inverse = seq.two_inverse;
        if (target) {
            try {
                inverse = find_two_qubit_clifford(total.adjoint());
            } catch (const PhysicsError&) {
                throw InputError("target-not-clifford", "interleaved gate " + target->label + " is not a Clifford");
            }
        }
        apply.two(rho, inverse);
    }
    return rho(0, 0).real();
}

std::vector<std::vector<double>> simulate(const GateSet& gates, const GateChannel* target,
                                          const RBOptions& options) {
    const std::size_t lengths = options.lengths.size();
    const auto per = static_cast<std::size_t>(options.sequences_per_length);
    std::vector<std::vector<double>> survival(lengths, std::vector<double>(per));
    for_each_index(lengths * per, options.policy, [&](std::size_t i) {
        const std::size_t l = i / per;
        const std::size_t s = i % per;
        const int m = options.lengths[l];
        const auto seed = derive_seed(options.seed, {rb_stream, static_cast<std::uint64_t>(m), s,
                                                     options.substream});
        survival[l][s] = sequence_survival(gates, target, m, seed);
    });
    return survival;
}

struct DecayFunctor {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    const std::vector<int>& m;
    const std::vector<double>& y;

    [[nodiscard]] int inputs() const { return 3; }
    [[nodiscard]] int values() const { return static_cast<int>(m.size()); }

    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
        for (std::size_t k = 0; k < m.size(); ++k) {
            f(static_cast<Eigen::Index>(k)) = x(0) * std::pow(x(2), m[k]) + x(1) - y[k];
        }
        return 0;
    }

    int df(const Eigen::VectorXd& x, Eigen::MatrixXd& j) const {
        for (std::size_t k = 0; k < m.size(); ++k) {
            const auto r = static_cast<Eigen::Index>(k);
            j(r, 0) = std::pow(x(2), m[k]);
            j(r, 1) = 1.0;
            j(r, 2) = x(0) * m[k] * std::pow(x(2), m[k] - 1);
        }
        return 0;
    }
};

}  // namespace

std::vector<int> default_rb_lengths() {
    std::vector<int> out;
    for (int m = 2; m <= 256; m *= 2) {
        out.push_back(m);
    }
    return out;
}

RBFit fit_rb_decay(const std::vector<int>& lengths, const std::vector<double>& survival, int d) {
    if (lengths.size() != survival.size() || lengths.size() < 3) {
        throw InputError("bad-lengths", "decay fit needs at least 3 (length, survival) points");
    }
    RBFit fit;
    const auto [lo, hi] = std::minmax_element(survival.begin(), survival.end());
    if (*hi - *lo < 1e-12) {
        fit.b = 1.0 / d;
        fit.a = mean_of(survival) - fit.b;
        fit.p = 1.0;
        return fit;
    }
    Eigen::VectorXd x(3);
    x << 1.0 - 1.0 / d, 1.0 / d, 0.99;
    // Decay seed from the end points with B at 1/d.
    const double y0 = survival.front() - x(1);
    const double y1 = survival.back() - x(1);
    if (y0 > 0.0 && y1 > 0.0) {
        x(2) = std::clamp(std::pow(y1 / y0, 1.0 / (lengths.back() - lengths.front())), 0.5, 0.999999);
    }
    DecayFunctor functor{lengths, survival};
    Eigen::LevenbergMarquardt<DecayFunctor> lm(functor);
    lm.parameters.maxfev = 2000;
    lm.parameters.xtol = 1e-14;
    lm.parameters.ftol = 1e-14;
    const auto status = lm.minimize(x);
    using Status = Eigen::LevenbergMarquardtSpace::Status;
    if (status == Status::ImproperInputParameters || status == Status::TooManyFunctionEvaluation ||
        status == Status::NotStarted || status == Status::Running || !x.allFinite()) {
        throw PhysicsError("fit-not-converged", "RB decay fit did not converge");
    }
    constexpr double p_tolerance = 1e-6;
    if (x(2) < -p_tolerance || x(2) > 1.0 + p_tolerance) {
        throw PhysicsError("p-out-of-range", "fitted decay p = " + std::to_string(x(2)) + " outside [0, 1]");
    }
    fit.a = x(0);
    fit.b = x(1);
    fit.p = std::clamp(x(2), 0.0, 1.0);
    Eigen::VectorXd residual(lengths.size());
    functor(x, residual);
    fit.residual_rms = std::sqrt(residual.squaredNorm() / static_cast<double>(lengths.size()));
    return fit;
}

RBResult analyze_rb(int qubits, const std::vector<int>& lengths,
                    std::vector<std::vector<double>> survival, int resamples, std::uint64_t seed) {
    RBResult out;
    out.qubits = qubits;
    out.lengths = lengths;
    out.survival = std::move(survival);
    for (const auto& row : out.survival) {
        out.survival_mean.push_back(mean_of(row));
        out.survival_std.push_back(std_of(row));
    }
    const int d = 1 << qubits;
    out.fit = fit_rb_decay(lengths, out.survival_mean, d);
    out.r = (1.0 - out.fit.p) * (d - 1) / d;
    out.fidelity = 1.0 - out.r;
    if (qubits == 1) {
        double pulses = 0.0;
        for (const auto& c : single_qubit_clifford_pulses()) {
            pulses += static_cast<double>(std::max<std::size_t>(c.size(), 1));  // identity idles one slot
        }
        pulses /= single_qubit_clifford_count;
        out.per_gate_fidelity = 1.0 - out.r / pulses;
    }

    std::mt19937_64 rng(derive_seed(seed, {bootstrap_stream}));
    std::vector<double> ps;
    for (int r = 0; r < resamples; ++r) {
        std::vector<double> means;
        for (const auto& row : out.survival) {
            std::uniform_int_distribution<std::size_t> pick(0, row.size() - 1);
            double s = 0.0;
            for (std::size_t k = 0; k < row.size(); ++k) {
                s += row[pick(rng)];
            }
            means.push_back(s / static_cast<double>(row.size()));
        }
        try {
            ps.push_back(fit_rb_decay(lengths, means, d).p);
        } catch (const PhysicsError&) {
            // A failed resample is dropped.
        }
    }
    out.p_std = std_of(ps);
    return out;
}

RBResult run_rb(const GateSet& gates, const RBOptions& options) {
    check_options(options);
    check_gates(gates);
    return analyze_rb(gates.qubits, options.lengths, simulate(gates, nullptr, options),
                      options.bootstrap_resamples, derive_seed(options.seed, {options.substream}));
}

std::vector<RBResult> run_simultaneous_rb(const GateSet& gates, const SimultaneousContext& context,
                                          const RBOptions& options) {
    check_options(options);
    check_gates(gates);
    if (gates.qubits != 1) {
        throw InputError("unsupported-arity", "simultaneous RB runs single-qubit experiments");
    }
    const double theta = units::angular_from_mhz(context.zz_mhz) / 4.0 * context.clifford_duration_ns;
    const Eigen::Vector4cd zz_phase{std::exp(Complex(0, -theta)), std::exp(Complex(0, theta)),
                                    std::exp(Complex(0, theta)), std::exp(Complex(0, -theta))};
    const Eigen::MatrixXcd zz = zz_phase.asDiagonal();
    const std::optional<Eigen::MatrixXcd> noise =
        gates.clifford_noise
            ? std::optional<Eigen::MatrixXcd>(tensor(*gates.clifford_noise, *gates.clifford_noise).superoperator)
            : std::nullopt;
    const auto& c1 = single_qubit_cliffords();

    const std::size_t lengths = options.lengths.size();
    const auto per = static_cast<std::size_t>(options.sequences_per_length);
    std::array<std::vector<std::vector<double>>, 2> survival;
    survival.fill(std::vector<std::vector<double>>(lengths, std::vector<double>(per)));
    for_each_index(lengths * per, options.policy, [&](std::size_t i) {
        const std::size_t l = i / per;
        const std::size_t s = i % per;
        const int m = options.lengths[l];
        std::array<CliffordSequence, 2> seq;
        for (std::uint64_t q = 0; q < 2; ++q) {
            seq[q] = sample_clifford_sequence(
                1, m, derive_seed(options.seed, {rb_stream, static_cast<std::uint64_t>(m), s, q}));
        }
        Eigen::MatrixXcd rho = ground(4);
        const auto step = [&](int a, int b) {
            apply_unitary(rho, kron2(c1[a], c1[b]));
            apply_unitary(rho, zz);
            if (noise) {
                apply_channel(rho, *noise);
            }
        };
        for (int k = 0; k < m; ++k) {
            step(seq[0].single[k], seq[1].single[k]);
        }
        step(seq[0].single_inverse, seq[1].single_inverse);
        survival[0][l][s] = (rho(0, 0) + rho(1, 1)).real();
        survival[1][l][s] = (rho(0, 0) + rho(2, 2)).real();
    });
    std::vector<RBResult> out;
    for (std::uint64_t q = 0; q < 2; ++q) {
        out.push_back(analyze_rb(1, options.lengths, survival[q], options.bootstrap_resamples,
                                 derive_seed(options.seed, {q})));
    }
    return out;
}

InterleavedResult run_interleaved_rb(const GateSet& gates, const GateChannel& target,
                                     const RBOptions& options) {
    check_options(options);
    check_gates(gates);
    if (target.qubits != gates.qubits) {
        throw InputError("arity-mismatch", "interleaved gate " + target.label + " has the wrong arity");
    }
    require_cptp(target, 1e-8, true);
    InterleavedResult out;
    out.reference = analyze_rb(gates.qubits, options.lengths, simulate(gates, nullptr, options),
                               options.bootstrap_resamples, derive_seed(options.seed, {options.substream}));
    out.interleaved = analyze_rb(gates.qubits, options.lengths, simulate(gates, &target, options),
                                 options.bootstrap_resamples,
                                 derive_seed(options.seed, {options.substream, 1}));
    const double p_ref = out.reference.fit.p;
    const double p_il = out.interleaved.fit.p;
    const double sigma = std::hypot(out.reference.p_std, out.interleaved.p_std);
    if (p_il - p_ref > std::max(2.0 * sigma, 1e-9)) {
        throw PhysicsError("unphysical-ratio", "interleaved decay " + std::to_string(p_il) +
                                                   " exceeds reference decay " + std::to_string(p_ref));
    }
    const int d = 1 << gates.qubits;
    out.ratio = p_ref > 0.0 ? p_il / p_ref : 0.0;
    out.fidelity = 1.0 - (1.0 - out.ratio) * (d - 1) / d;
    const double ratio_std =
        p_ref > 0.0 && p_il > 0.0
            ? out.ratio * std::hypot(out.reference.p_std / p_ref, out.interleaved.p_std / p_il)
            : 0.0;
    out.fidelity_std = ratio_std * (d - 1) / d;
    return out;
}

GateChannel process_channel(const std::string& label, const Eigen::MatrixXcd& superoperator,
                            const Eigen::MatrixXcd& ideal) {
    GateChannel out = unitary_channel(label, ideal);
    if (superoperator.rows() != out.superoperator.rows() || superoperator.cols() != out.superoperator.cols()) {
        throw InputError("bad-dimension", "process " + label + " does not match its ideal gate");
    }
    out.superoperator = superoperator;
    return out;
}

nlohmann::json RBResult::to_json() const {
    nlohmann::json j;
    j["lengths"] = lengths;
    j["survival_mean"] = survival_mean;
    j["survival_std"] = survival_std;
    j["fit"] = {{"A", fit.a}, {"B", fit.b}, {"p", fit.p}, {"residual_rms", fit.residual_rms}};
    j["r"] = r;
    j["fidelity"] = fidelity;
    j["bootstrap_std"] = p_std;
    j["per_gate_fidelity"] = per_gate_fidelity ? nlohmann::json(*per_gate_fidelity) : nlohmann::json();
    return j;
}

nlohmann::json InterleavedResult::to_json() const {
    nlohmann::json j;
    j["reference"] = reference.to_json();
    j["interleaved"] = interleaved.to_json();
    j["ratio"] = ratio;
    j["fidelity"] = fidelity;
    j["fidelity_std"] = fidelity_std;
    return j;
}

}  // namespace stq
