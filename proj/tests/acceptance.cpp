// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>

#include "stq/cli.hpp"
#include "stq/cz.hpp"
#include "stq/rb.hpp"
#include "stq/seeding.hpp"
#include "stq/tomography.hpp"
#include "stq/topology.hpp"
#include "stq/wstate.hpp"
#include "support.hpp"

using namespace stq;
using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
    bool pass = true;
    std::string detail;

    void require(bool ok, const std::string& what) {
        pass = pass && ok;
        if (!detail.empty()) {
            detail += "; ";
        }
        detail += what + (ok ? "" : " [x]");
    }
};

std::string fmt(const char* pattern, double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, value);
    return buf;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

int cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    return run_command(args, out, err);
}

std::vector<double> grid(double stop, double step) {
    std::vector<double> t;
    for (int k = 0; k * step <= stop + 1e-12; ++k) {
        t.push_back(k * step);
    }
    return t;
}

const CZCalibration& calibration(const QubitPair& pair) {
    static std::map<std::string, CZCalibration> cache;
    const auto key = pair.a + "-" + pair.b;
    if (!cache.contains(key)) {
        const auto& device = testing::paper_like();
        cache.emplace(key, calibrate_cz(device, pair, cz_coupler_flux(device, pair)));
    }
    return cache.at(key);
}

Outcome zz_closing() {
    Outcome o;
    const auto start = Clock::now();
    for (const auto& pair : {"Q2,Q3", "Q3,Q4", "Q3,Q7"}) {
        const auto dir = testing::scratch_dir(std::string("acc_zz_") + pair);
        const int status = cli({"--out", dir.string(), "zz-zero", "--pair", pair});
        if (status != 0) {
            o.require(false, std::string(pair) + " exit " + std::to_string(status));
            continue;
        }
        const auto doc = json::parse(slurp(dir / "zz_zero.json"));
        const double zeta = doc.at("zeta_khz");
        const int evals = doc.at("scan_points").get<int>() + doc.at("evaluations").get<int>();
        o.require(std::abs(zeta) < 1.0 && evals <= 100,
                  std::string(pair) + " flux " + fmt("%.5f", doc.at("flux")) + " zeta " + fmt("%.3g kHz", zeta) +
                      " evals " + std::to_string(evals));
    }
    const double t = seconds_since(start);
    o.require(t < 60.0, "runtime " + fmt("%.1f s", t));
    return o;
}

Outcome chevron_oracle() {
    Outcome o;
    const auto& device = testing::paper_like();
    const QubitPair pair{"Q3", "Q7"};
    const double flux = cz_coupler_flux(device, pair);
    const auto resonance = transfer_resonance(device, plan_transfer(device, pair), flux);
    const double lambda = resonance.lambda_mhz;
    // Two-level oracle: Omega = 2 lambda, first peak pi/Omega.
    const double t_peak = 1e3 / (4.0 * lambda);
    const double delta = 4.0 * lambda;  // 2 (2 sqrt(2) g_eff)
    const auto times = grid(1.5 * t_peak, 0.02);
    const auto map = chevron_scan(device, pair, {-delta, 0.0, delta}, times, flux);
    std::size_t best = 0;
    for (std::size_t j = 0; j < times.size(); ++j) {
        if (map.at(1, j) > map.at(1, best)) {
            best = j;
        }
    }
    const double rel = std::abs(times[best] - t_peak) / t_peak;
    o.require(rel < 0.02, "peak " + fmt("%.2f ns", times[best]) + " vs " + fmt("%.2f ns", t_peak));
    const double oracle = 4.0 * lambda * lambda / (4.0 * lambda * lambda + delta * delta);
    for (std::size_t i : {0, 2}) {
        const double peak = *std::max_element(map.population.begin() + static_cast<long>(i * times.size()),
                                               map.population.begin() + static_cast<long>((i + 1) * times.size()));
        o.require(std::abs(peak - oracle) < 0.05,
                  "detuned " + fmt("%+.3f MHz", map.detunings_mhz[i]) + " height " + fmt("%.4f", peak) +
                      " vs " + fmt("%.4f", oracle));
    }
    return o;
}

Outcome noiseless_cz() {
    Outcome o;
    const auto& device = testing::paper_like();
    std::vector<double> fidelities;
    for (const QubitPair pair : {QubitPair{"Q2", "Q3"}, QubitPair{"Q3", "Q7"}}) {
        const auto& cal = calibration(pair);
        const double phase_error = std::abs(std::remainder(cal.conditional_phase - std::numbers::pi, 2 * std::numbers::pi));
        const double f = gate_fidelity(device, cal, {}).average_fidelity;
        fidelities.push_back(f);
        o.require(phase_error < 0.01 && cal.leakage < 1e-3 && f > 0.999,
                  pair.a + "-" + pair.b + " dphi " + fmt("%.2e", phase_error) + " leak " + fmt("%.1e", cal.leakage) +
                      " F " + fmt("%.6f", f));
    }
    const double spread = std::abs(fidelities[0] - fidelities[1]);
    o.require(spread < 1e-3, "spread " + fmt("%.2e", spread));
    return o;
}

Outcome coherence_limited() {
    Outcome o;
    const auto& device = testing::paper_like();
    const auto& cal = calibration({"Q3", "Q7"});
    const auto t1 = NoiseSpec::uniform({"Q3", "Q7"}, 20.0);
    const double f = gate_fidelity(device, cal, t1).average_fidelity;
    const double estimate = coherence_limited_fidelity(device, cal, t1);
    const double rel = std::abs((1.0 - f) - (1.0 - estimate)) / (1.0 - estimate);
    o.require(rel < 0.1, "T1=20us F " + fmt("%.5f", f) + " estimate " + fmt("%.5f", estimate));
    const double lo = gate_fidelity(device, cal, NoiseSpec::uniform({"Q3", "Q7"}, 20.0, 10.0)).average_fidelity;
    const double hi = gate_fidelity(device, cal, NoiseSpec::uniform({"Q3", "Q7"}, 20.0, 40.0)).average_fidelity;
    o.require(lo <= 0.975 && 0.975 <= hi, "Tphi 10..40us F " + fmt("%.4f", lo) + ".." + fmt("%.4f", hi));
    return o;
}

Outcome rb_correctness() {
    Outcome o;
    const auto start = Clock::now();
    RBOptions options;
    options.seed = derive_seed(2024, {stream_key("rb")});
    const auto dep = run_rb(GateSet{1, depolarizing(1, 0.999), std::nullopt}, options);
    o.require(std::abs(dep.fit.p - 0.999) < 5e-4, "depolarizing p " + fmt("%.6f", dep.fit.p));
    const auto ideal = run_rb(GateSet{1, std::nullopt, std::nullopt}, options);
    const auto ideal2 = run_rb(GateSet{2, std::nullopt, std::nullopt}, options);
    o.require(ideal.r < 1e-4 && ideal2.r < 1e-4, "ideal r " + fmt("%.1e", std::max(ideal.r, ideal2.r)));
    const GateSet noisy{1, amplitude_damping(0.002), std::nullopt};
    const auto joint = run_simultaneous_rb(noisy, {}, options);
    for (std::uint64_t q = 0; q < 2; ++q) {
        auto iso_options = options;
        iso_options.substream = q;
        const auto iso = run_rb(noisy, iso_options);
        const double se = std::hypot(iso.p_std, joint[q].p_std);
        const double gap = std::abs(iso.fit.p - joint[q].fit.p);
        o.require(gap <= 2.0 * se, "q" + std::to_string(q) + " |dp| " + fmt("%.1e", gap) + " 2SE " + fmt("%.1e", 2 * se));
    }
    const double t = seconds_since(start);
    o.require(t < 300.0, "runtime " + fmt("%.1f s", t));
    return o;
}

Outcome tomography() {
    Outcome o;
    const auto& device = testing::paper_like();
    const auto& cal = calibration({"Q3", "Q7"});
    BellOptions ideal;
    ideal.ideal_cz = true;
    const auto bell = prepare_bell(device, {"Q3", "Q7"}, cal, {}, ideal);
    const double exact = state_fidelity(state_tomography(bell).rho, bell_state());
    o.require(exact > 1.0 - 1e-9, "exact fidelity 1-" + fmt("%.1e", 1.0 - exact));
    const auto physical = prepare_bell(device, {"Q3", "Q7"}, cal, {});
    const double err = (state_tomography(physical).rho - physical).cwiseAbs().maxCoeff();
    o.require(err < 1e-9, "simulated-CZ state reconstruction error " + fmt("%.1e", err));
    int good = 0;
    for (int k = 0; k < 100; ++k) {
        TomographyOptions options;
        options.shots = 5000;
        options.seed = derive_seed(2024, {stream_key("qst"), static_cast<std::uint64_t>(k)});
        good += state_fidelity(state_tomography(bell, options).rho, bell_state()) > 0.98 ? 1 : 0;
    }
    o.require(good >= 95, "5000 shots: " + std::to_string(good) + "/100 seeds above 0.98");
    return o;
}

Outcome w_state() {
    Outcome o;
    const auto& device = testing::paper_like();
    const std::vector<std::string> targets{"Q2", "Q4", "Q7"};
    const auto times = grid(150.0, 0.25);

    EqualizeOptions at_paper;
    at_paper.target_mhz = -2.124;
    for (const auto& c : {"C_23", "C_34", "C_37"}) {
        at_paper.start.set(c, 0.1);
    }
    const auto eq = equalize_couplings(device, "Q3", targets, at_paper);
    const auto trace = wstate_evolution(device, "Q3", targets, eq.fluxes, times);
    o.require(trace.max_w_fidelity > 0.99 && std::abs(trace.t_star_ns - 68.0) <= 2.0,
              "F_W " + fmt("%.5f", trace.max_w_fidelity) + " at " + fmt("%.2f ns", trace.t_star_ns));

    const auto center = static_cast<std::size_t>(std::find(trace.order.begin(), trace.order.end(), "Q3") - trace.order.begin());
    double g = 0.0;
    for (double x : trace.couplings_mhz) {
        g += std::abs(x) / 3.0;
    }
    double sq = 0.0;
    for (std::size_t j = 0; j < times.size(); ++j) {
        const double model = std::pow(std::cos(std::sqrt(3.0) * units::angular_from_mhz(g) * times[j]), 2);
        sq += std::pow(trace.populations[center][j] - model, 2);
    }
    const double rms = std::sqrt(sq / static_cast<double>(times.size()));
    o.require(rms < 0.02, "center population RMS " + fmt("%.2e", rms));

    const auto natural = equalize_couplings(device, "Q3", targets);
    double lo = 1e9, hi = 0.0;
    for (const auto& b : natural.branches) {
        lo = std::min(lo, std::abs(b.g_mhz));
        hi = std::max(hi, std::abs(b.g_mhz));
    }
    o.require((hi - lo) / hi < 0.01, "equalized at " + fmt("%.4f MHz", natural.target_mhz) + ", spread " +
                                         fmt("%.2e", (hi - lo) / hi));
    return o;
}

double coherence_rate(double t1_us, double tphi_us) {
    const DeviceSpec device({{"A", ModeKind::qubit, 5.0, -0.25, 3, true, 0.0}}, {});
    const ModeSubset subset(device, {"A"});
    Eigen::VectorXcd plus = Eigen::VectorXcd::Zero(3);
    plus(0) = plus(1) = 1.0 / std::sqrt(2.0);
    DensityState rho{subset, plus * plus.adjoint()};
    NoiseSpec noise;
    noise.t1_us["A"] = t1_us;
    noise.tphi_us["A"] = tphi_us;
    const double t = 5000.0;
    FluxSchedule s(t);
    s.constant("A", 0.0, t, 0.0);
    rho = evolve_lindblad(device, s, noise, rho);
    return -std::log(2.0 * std::abs(rho.matrix(0, 1))) / t;
}

Outcome open_system() {
    Outcome o;
    for (const auto [t1, tphi] : {std::pair{20.0, 10.0}, std::pair{20.0, 40.0}, std::pair{50.0, 15.0}}) {
        const double expected = 1e-3 * (1.0 / (2.0 * t1) + 1.0 / tphi);
        const double rate = coherence_rate(t1, tphi);
        o.require(std::abs(rate - expected) / expected < 0.01,
                  "T1 " + fmt("%g", t1) + " Tphi " + fmt("%g", tphi) + ": rate/expected " + fmt("%.6f", rate / expected));
    }
    return o;
}

Outcome topology() {
    Outcome o;
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> small(1, 4);
    std::uniform_int_distribution<int> layers(1, 3);
    int matched = 0;
    bool unfold_ok = true;
    for (int k = 0; k < 10; ++k) {
        TopologyScheme s;
        s.chip_rows = small(rng);
        s.chip_cols = small(rng);
        s.qubit_rows = small(rng);
        s.qubit_cols = small(rng);
        s.layers = layers(rng);
        const std::size_t R = s.chip_rows, C = s.chip_cols, r = s.qubit_rows, c = s.qubit_cols, L = s.layers;
        const auto g = build_topology(s);
        const std::size_t nodes = R * C * r * c * L;
        const std::size_t planar = R * C * L * (2 * r * c - r - c);
        const std::size_t lateral = L * ((C - 1) * R * r + (R - 1) * C * c);
        const std::size_t vertical = (L - 1) * R * r * C * c;
        matched += g.nodes.size() == nodes && g.count(EdgeClass::planar) == planar &&
                           g.count(EdgeClass::lateral) == lateral && g.count(EdgeClass::vertical) == vertical
                       ? 1
                       : 0;
        unfold_ok = unfold_ok && unfold_planar(g).graph.edges.size() == g.edges.size();
    }
    o.require(matched == 10, std::to_string(matched) + "/10 schemes match");
    o.require(unfold_ok, "unfold preserves edge count");
    const auto a = testing::scratch_dir("acc_topo_a");
    const auto b = testing::scratch_dir("acc_topo_b");
    const std::vector<std::string> tail{"topo", "build", "--chips", "2x3", "--qubits", "2x2", "--layers", "3"};
    auto args_a = std::vector<std::string>{"--out", a.string()};
    auto args_b = std::vector<std::string>{"--out", b.string()};
    args_a.insert(args_a.end(), tail.begin(), tail.end());
    args_b.insert(args_b.end(), tail.begin(), tail.end());
    const bool ran = cli(args_a) == 0 && cli(args_b) == 0;
    o.require(ran && slurp(a / "topology.json") == slurp(b / "topology.json"), "byte-identical export");
    return o;
}

Outcome hygiene() {
    Outcome o;
    const auto& device = testing::paper_like();
    for (const QubitPair pair : {QubitPair{"Q2", "Q3"}, QubitPair{"Q3", "Q7"}}) {
        const auto& cal = calibration(pair);
        const auto schedule = cz_schedule(cal);
        const auto basis = computational_basis(device, pair);
        double norm_drift = 0.0;
        double trace_drift = 0.0;
        const auto noise = NoiseSpec::uniform({pair.a, pair.b}, 20.0, 20.0);
        for (int k = 0; k < 4; ++k) {
            const Eigen::VectorXcd psi = basis.vectors.col(k);
            const auto u = propagator(device, basis.subset, schedule);
            norm_drift = std::max(norm_drift, std::abs((u * psi).norm() - 1.0));
            (void)evolve_unitary(device, schedule, {basis.subset, psi});
            const auto rho = evolve_lindblad(device, schedule, noise, {basis.subset, psi * psi.adjoint()});
            trace_drift = std::max(trace_drift, std::abs(rho.matrix.trace().real() - 1.0));
        }
        o.require(norm_drift < 1e-9 && trace_drift < 1e-6,
                  pair.a + "-" + pair.b + " norm " + fmt("%.1e", norm_drift) + " trace " + fmt("%.1e", trace_drift));

        EvolutionOptions half;
        half.dt = 0.5 * EvolutionOptions{}.dt;
        half.hold_dt = 0.5 * EvolutionOptions{}.hold_dt;
        const double f0 = gate_fidelity(device, cal, {}).average_fidelity;
        const double f1 = gate_fidelity(device, cal, {}, half).average_fidelity;
        const double n0 = gate_fidelity(device, cal, noise).average_fidelity;
        const double n1 = gate_fidelity(device, cal, noise, half).average_fidelity;
        const double change = std::max(std::abs(f0 - f1), std::abs(n0 - n1));
        o.require(change < 1e-6, "dt halving " + fmt("%.1e", change));
    }
    return o;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"1 zz-closing", zz_closing},         {"2 chevron-oracle", chevron_oracle},
        {"3 noiseless-cz", noiseless_cz},     {"4 coherence-limited-cz", coherence_limited},
        {"5 rb-correctness", rb_correctness}, {"6 tomography", tomography},
        {"7 w-state", w_state},               {"8 open-system", open_system},
        {"9 topology", topology},             {"10 numerical-hygiene", hygiene},
    };
    int failures = 0;
    for (const auto& [name, check] : criteria) {
        const auto start = Clock::now();
        Outcome outcome;
        try {
            outcome = check();
        } catch (const std::exception& e) {
            outcome.require(false, std::string("exception: ") + e.what());
        }
        failures += outcome.pass ? 0 : 1;
        std::printf("%s criterion %s (%.1f s): %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(),
                    seconds_since(start), outcome.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
