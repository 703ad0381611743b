#include "stq/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "stq/cz.hpp"
#include "stq/errors.hpp"
#include "stq/rb.hpp"
#include "stq/seeding.hpp"
#include "stq/statics.hpp"
#include "stq/tomography.hpp"
#include "stq/topology.hpp"
#include "stq/wstate.hpp"

namespace stq {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr double infinity = std::numeric_limits<double>::infinity();

std::string number(double v) {
    if (std::isnan(v)) {
        return "nan";
    }
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.12g", v);
    return buffer;
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream is(text);
    while (std::getline(is, item, sep)) {
        out.push_back(item);
    }
    return out;
}

double parse_number(const std::string& text, const std::string& what) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size() || !std::isfinite(v)) {
            throw std::invalid_argument(text);
        }
        return v;
    } catch (const std::exception&) {
        throw InputError("bad-number", what + ": '" + text + "' is not a finite number");
    }
}

QubitPair parse_pair(const std::string& text) {
    const auto parts = split(text, ',');
    if (parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
        throw InputError("bad-pair", "expected a qubit pair like Q3,Q7, got '" + text + "'");
    }
    return {parts[0], parts[1]};
}

std::pair<int, int> parse_dims(const std::string& text) {
    const auto parts = split(text, 'x');
    if (parts.size() != 2) {
        throw InputError("bad-dimensions", "expected RxC, got '" + text + "'");
    }
    return {static_cast<int>(parse_number(parts[0], "rows")), static_cast<int>(parse_number(parts[1], "columns"))};
}

// One command invocation: collects the files it writes and emits the manifest.
class Run {
public:
    Run(std::string command, std::vector<std::string> args, std::optional<std::string> device,
        std::uint64_t seed, fs::path out)
        : command_(std::move(command)), args_(std::move(args)), device_(std::move(device)),
          seed_(seed), out_(std::move(out)), start_(std::chrono::steady_clock::now()) {
        fs::create_directories(out_);
    }

    void write(const std::string& name, const std::string& content) {
        std::ofstream f(out_ / name, std::ios::binary);
        if (!f) {
            throw InputError("unwritable-output", "cannot write " + (out_ / name).string());
        }
        f << content;
        outputs_.push_back(name);
    }

    void write_json(const std::string& name, const json& document) { write(name, document.dump(2) + "\n"); }

    void finish(std::ostream& out) const {
        json manifest;
        manifest["command"] = command_;
        manifest["arguments"] = args_;
        manifest["device"] = device_ ? json(*device_) : json();
        manifest["seed"] = seed_;
        manifest["output_directory"] = out_.string();
        manifest["outputs"] = outputs_;
        manifest["version"] = tool_version;
        manifest["runtime_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        const auto name = command_ + ".manifest.json";
        std::ofstream(out_ / name, std::ios::binary) << manifest.dump(2) << "\n";
        for (const auto& o : outputs_) {
            out << (out_ / o).string() << "\n";
        }
        out << (out_ / name).string() << "\n";
    }

private:
    std::string command_;
    std::vector<std::string> args_;
    std::optional<std::string> device_;
    std::uint64_t seed_;
    fs::path out_;
    std::vector<std::string> outputs_;
    std::chrono::steady_clock::time_point start_;
};

NoiseSpec noise_for(const QubitPair& pair, double t1_us, double tphi_us) {
    if (!(t1_us > 0.0) || !(tphi_us > 0.0)) {
        throw InputError("bad-noise", "T1 and Tphi must be positive");
    }
    if (std::isinf(t1_us) && std::isinf(tphi_us)) {
        return {};
    }
    return NoiseSpec::uniform({pair.a, pair.b}, t1_us, tphi_us);
}

CZCalibration load_calibration(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw InputError("missing-file", "cannot read calibration " + path);
    }
    try {
        return CZCalibration::from_json(json::parse(f));
    } catch (const json::exception& e) {
        throw InputError("schema", "calibration " + path + ": " + e.what());
    }
}

json matrix_json(const Eigen::MatrixXcd& m, bool imaginary) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(imaginary ? m(r, c).imag() : m(r, c).real());
        }
        rows.push_back(row);
    }
    return rows;
}

// Options of the topology subcommands.
struct TopoArgs {
    std::string chips = "1x1";
    std::string qubits = "2x2";
    int layers = 1;
    std::string selective;
    bool no_vertical = false;
    std::string format = "json";
    std::string graph;

    void add(CLI::App* app, bool with_graph) {
        app->add_option("--chips", chips, "Chip grid RxC")->capture_default_str();
        app->add_option("--qubits", qubits, "Qubits per chip RxC")->capture_default_str();
        app->add_option("--layers", layers, "Qubit layers")->capture_default_str();
        app->add_option("--selective", selective, "Selective edges a:b,c:d");
        app->add_flag("--no-vertical", no_vertical, "Skip aligned vertical edges");
        app->add_option("--format", format, "json or dot")->check(CLI::IsMember({"json", "dot"}))->capture_default_str();
        if (with_graph) {
            app->add_option("--graph", graph, "Validate this exported graph instead of building one");
        }
    }

    [[nodiscard]] TopologyScheme scheme() const {
        TopologyScheme s;
        std::tie(s.chip_rows, s.chip_cols) = parse_dims(chips);
        std::tie(s.qubit_rows, s.qubit_cols) = parse_dims(qubits);
        s.layers = layers;
        s.full_vertical = !no_vertical;
        if (!selective.empty()) {
            for (const auto& item : split(selective, ',')) {
                const auto ends = split(item, ':');
                if (ends.size() != 2) {
                    throw InputError("bad-selective", "selective edge '" + item + "' is not a:b");
                }
                s.selective.emplace_back(ends[0], ends[1]);
            }
        }
        return s;
    }
};

int fail(std::ostream& err, int status, const std::string& code, const std::string& message) {
    err << json{{"error", code}, {"message", message}, {"exit_status", status}}.dump() << "\n";
    return status;
}

}  // namespace

std::vector<double> parse_grid(const std::string& text) {
    const auto parts = split(text, ':');
    if (parts.size() == 1) {
        return {parse_number(parts[0], "grid")};
    }
    if (parts.size() != 3) {
        throw InputError("bad-grid", "grid must be start:stop:step, got '" + text + "'");
    }
    const double start = parse_number(parts[0], "grid start");
    const double stop = parse_number(parts[1], "grid stop");
    const double step = parse_number(parts[2], "grid step");
    if (!(step > 0.0) || stop < start) {
        throw InputError("bad-grid", "grid '" + text + "' needs step > 0 and stop >= start");
    }
    const auto n = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    std::vector<double> grid(n);
    for (std::size_t k = 0; k < n; ++k) {
        grid[k] = start + static_cast<double>(k) * step;
    }
    return grid;
}

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stacked-transmon simulator and calibration harness", "stq"};
    app.set_version_flag("--version", tool_version);
    app.require_subcommand(1);

    std::string device_path = paper_like_config_path().string();
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    int jobs = 0;
    app.add_option("--device", device_path, "Device config JSON")->capture_default_str();
    app.add_option("--seed", seed, "Root seed")->capture_default_str();
    app.add_option("--out", out_dir, "Output directory")->capture_default_str();
    app.add_option("--jobs", jobs, "Worker cap (0 = OpenMP default)");

    // spectrum
    auto* spectrum = app.add_subcommand("spectrum", "Dressed coupler 0->1 frequency vs flux");
    std::string coupler;
    std::string flux_grid = "0:0.45:0.01";
    spectrum->add_option("--coupler", coupler, "Coupler id")->required();
    spectrum->add_option("--flux", flux_grid, "Flux grid start:stop:step")->capture_default_str();

    // zz-scan
    auto* zz_scan_cmd = app.add_subcommand("zz-scan", "Residual ZZ vs coupler flux");
    std::string pair_text;
    zz_scan_cmd->add_option("--pair", pair_text, "Qubit pair a,b")->required();
    zz_scan_cmd->add_option("--flux", flux_grid, "Flux grid start:stop:step")->capture_default_str();

    // zz-zero
    auto* zz_zero_cmd = app.add_subcommand("zz-zero", "ZZ closing point search");
    std::string bracket;
    double tol_khz = 1.0;
    int max_evals = 100;
    zz_zero_cmd->add_option("--pair", pair_text, "Qubit pair a,b")->required();
    zz_zero_cmd->add_option("--bracket", bracket, "lo:hi (default: first sign change of a 0:0.45:0.01 scan)");
    zz_zero_cmd->add_option("--tol-khz", tol_khz, "Tolerance on |zeta|")->capture_default_str();
    zz_zero_cmd->add_option("--max-evals", max_evals, "Evaluation budget")->capture_default_str();

    // geff
    auto* geff_cmd = app.add_subcommand("geff", "Effective qubit-qubit coupling");
    std::optional<double> coupler_flux;
    std::string method = "splitting";
    std::string swept;
    bool counter_rotating = false;
    geff_cmd->add_option("--pair", pair_text, "Qubit pair a,b")->required();
    geff_cmd->add_option("--coupler-flux", coupler_flux, "Coupler flux (default idle)");
    geff_cmd->add_option("--method", method, "splitting or perturbative")
        ->check(CLI::IsMember({"splitting", "perturbative"}))
        ->capture_default_str();
    geff_cmd->add_option("--swept", swept, "Qubit swept through resonance");
    geff_cmd->add_flag("--counter-rotating", counter_rotating, "Add counter-rotating correction");

    // chevron
    auto* chevron_cmd = app.add_subcommand("chevron", "|11>-|02> swap chevron");
    double geff_mhz = 1.4;
    std::string detuning_grid = "-10:10:0.5";
    std::string time_grid = "0:500:2";
    std::string mobile;
    chevron_cmd->add_option("--pair", pair_text, "Qubit pair a,b")->required();
    chevron_cmd->add_option("--coupler-flux", coupler_flux, "Coupler operating flux");
    chevron_cmd->add_option("--geff-mhz", geff_mhz, "Target |11>-|02> coupling when no flux is given")
        ->capture_default_str();
    chevron_cmd->add_option("--detuning", detuning_grid, "Detuning grid (MHz)")->capture_default_str();
    chevron_cmd->add_option("--time", time_grid, "Time grid (ns)")->capture_default_str();
    chevron_cmd->add_option("--mobile", mobile, "Qubit to detune");

    // cz-cal
    auto* cz_cal_cmd = app.add_subcommand("cz-cal", "Calibrate a diabatic CZ");
    double edge_ns = 2.0;
    double dt = 0.01;
    cz_cal_cmd->add_option("--pair", pair_text, "Qubit pair a,b")->required();
    cz_cal_cmd->add_option("--coupler-flux", coupler_flux, "Coupler operating flux");
    cz_cal_cmd->add_option("--geff-mhz", geff_mhz, "Target |11>-|02> coupling when no flux is given")
        ->capture_default_str();
    cz_cal_cmd->add_option("--mobile", mobile, "Qubit to detune");
    cz_cal_cmd->add_option("--edge-ns", edge_ns, "Cosine edge length")->capture_default_str();
    cz_cal_cmd->add_option("--dt", dt, "Integration step (ns)")->capture_default_str();

    // cz-fid
    auto* cz_fid_cmd = app.add_subcommand("cz-fid", "Process fidelity of a calibrated CZ");
    std::string calibration_path;
    double t1_us = infinity;
    double tphi_us = infinity;
    cz_fid_cmd->add_option("--calibration", calibration_path, "Calibration JSON from cz-cal")->required();
    cz_fid_cmd->add_option("--t1-us", t1_us, "T1 of both qubits");
    cz_fid_cmd->add_option("--tphi-us", tphi_us, "Tphi of both qubits");
    cz_fid_cmd->add_option("--dt", dt, "Integration step (ns)")->capture_default_str();

    // rb
    auto* rb_cmd = app.add_subcommand("rb", "Randomized benchmarking");
    std::string rb_mode;
    int qubits = 1;
    double depolarizing_p = 1.0;
    double damping = 0.0;
    std::string lengths_text;
    int sequences = 30;
    int bootstrap = 200;
    double zz_mhz = 0.0;
    std::string zz_pair;
    double clifford_ns = 40.0;
    std::string target = "cz";
    double target_depolarizing = 1.0;
    rb_cmd->add_option("mode", rb_mode, "isolated, simultaneous or interleaved")
        ->required()
        ->check(CLI::IsMember({"isolated", "simultaneous", "interleaved"}));
    auto* rb_qubits = rb_cmd->add_option("--qubits", qubits, "1 or 2 (interleaved CZ implies 2)")->capture_default_str();
    rb_cmd->add_option("--depolarizing", depolarizing_p, "Per-Clifford depolarizing parameter")->capture_default_str();
    rb_cmd->add_option("--damping", damping, "Per-Clifford amplitude damping (single qubit)")->capture_default_str();
    rb_cmd->add_option("--lengths", lengths_text, "Comma-separated lengths (default 2,4,...,256)");
    rb_cmd->add_option("--sequences", sequences, "Sequences per length")->capture_default_str();
    rb_cmd->add_option("--bootstrap", bootstrap, "Bootstrap resamples")->capture_default_str();
    rb_cmd->add_option("--zz-mhz", zz_mhz, "Residual ZZ for simultaneous RB")->capture_default_str();
    rb_cmd->add_option("--zz-pair", zz_pair, "Take the residual ZZ of this pair at idle");
    rb_cmd->add_option("--clifford-ns", clifford_ns, "Clifford duration for the ZZ phase")->capture_default_str();
    rb_cmd->add_option("--target", target, "Interleaved gate: cz or identity")
        ->check(CLI::IsMember({"cz", "identity"}))
        ->capture_default_str();
    rb_cmd->add_option("--target-depolarizing", target_depolarizing, "Depolarizing after the interleaved gate")
        ->capture_default_str();
    rb_cmd->add_option("--calibration", calibration_path, "Use the physical CZ of this calibration");
    rb_cmd->add_option("--t1-us", t1_us, "T1 for the physical CZ");
    rb_cmd->add_option("--tphi-us", tphi_us, "Tphi for the physical CZ");

    // qst
    auto* qst_cmd = app.add_subcommand("qst", "Two-qubit state tomography of the Bell state");
    std::optional<int> shots;
    bool use_ideal_cz = false;
    qst_cmd->add_option("--shots", shots, "Shots per Pauli setting (exact when omitted)");
    qst_cmd->add_option("--calibration", calibration_path, "Prepare with the physical CZ of this calibration");
    qst_cmd->add_option("--t1-us", t1_us, "T1 of both qubits");
    qst_cmd->add_option("--tphi-us", tphi_us, "Tphi of both qubits");

    // bell
    auto* bell_cmd = app.add_subcommand("bell", "Bell-state preparation with the physical CZ");
    bell_cmd->add_option("--calibration", calibration_path, "Calibration JSON from cz-cal")->required();
    bell_cmd->add_option("--t1-us", t1_us, "T1 of both qubits");
    bell_cmd->add_option("--tphi-us", tphi_us, "Tphi of both qubits");
    bell_cmd->add_flag("--ideal-cz", use_ideal_cz, "Substitute the ideal CZ");

    // wstate
    auto* w_cmd = app.add_subcommand("wstate", "Equalize couplings and evolve the W state");
    std::string center = "Q3";
    std::string targets_text = "Q2,Q4,Q7";
    std::optional<double> target_mhz;
    std::optional<double> start_flux;
    bool no_equalize = false;
    std::string w_time = "0:150:0.5";
    w_cmd->add_option("--center", center, "Center qubit")->capture_default_str();
    w_cmd->add_option("--targets", targets_text, "Target qubits")->capture_default_str();
    w_cmd->add_option("--target-mhz", target_mhz, "Common signed coupling (default: slowest branch)");
    w_cmd->add_option("--start-flux", start_flux, "Starting flux of every branch coupler");
    w_cmd->add_flag("--no-equalize", no_equalize, "Evolve at the starting fluxes");
    w_cmd->add_option("--time", w_time, "Time grid (ns)")->capture_default_str();

    // topo
    auto* topo_cmd = app.add_subcommand("topo", "Stacked-chip topologies");
    topo_cmd->require_subcommand(1);
    TopoArgs topo_args;
    auto* topo_build = topo_cmd->add_subcommand("build", "Build a topology graph");
    auto* topo_unfold = topo_cmd->add_subcommand("unfold", "Unfold layers into a planar layout");
    auto* topo_validate = topo_cmd->add_subcommand("validate", "Degree, geometry and connectivity report");
    topo_args.add(topo_build, false);
    topo_args.add(topo_unfold, false);
    topo_args.add(topo_validate, true);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << tool_version << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        out << app.help();
        return fail(err, 2, "usage", e.what());
    }

    try {
        set_worker_count(jobs);
        const auto sub = app.get_subcommands().front();
        std::string command = sub->get_name();
        if (command == "topo") {
            command += "-" + sub->get_subcommands().front()->get_name();
        }
        const bool needs_device = sub != topo_cmd;
        std::optional<DeviceSpec> device;
        if (needs_device) {
            device = load_device_file(device_path);
        }
        Run run(command, args, needs_device ? std::optional<std::string>(device_path) : std::nullopt, seed, out_dir);

        if (sub == spectrum) {
            const auto curve = coupler_spectrum_scan(*device, coupler, parse_grid(flux_grid));
            std::string csv = "flux,freq_ghz\r\n";
            for (const auto& p : curve.samples) {
                csv += number(p.flux) + "," + number(p.frequency_ghz) + "\r\n";
            }
            run.write("spectrum.csv", csv);
            run.write_json("spectrum.json", {{"coupler", coupler}, {"omitted_fluxes", curve.omitted_fluxes}});
        } else if (sub == zz_scan_cmd) {
            const auto pair = parse_pair(pair_text);
            const auto rows = zz_scan(*device, pair, parse_grid(flux_grid));
            std::string csv = "flux,zeta_mhz\r\n";
            for (const auto& r : rows) {
                csv += number(r.flux) + "," + number(r.zeta_mhz) + "\r\n";
            }
            run.write("zz_scan.csv", csv);
        } else if (sub == zz_zero_cmd) {
            const auto pair = parse_pair(pair_text);
            double lo = 0.0;
            double hi = 0.0;
            int scan_points = 0;
            if (!bracket.empty()) {
                const auto ends = split(bracket, ':');
                if (ends.size() != 2) {
                    throw InputError("bad-bracket", "bracket must be lo:hi");
                }
                lo = parse_number(ends[0], "bracket lo");
                hi = parse_number(ends[1], "bracket hi");
            } else {
                const auto rows = zz_scan(*device, pair, parse_grid("0:0.45:0.01"));
                scan_points = static_cast<int>(rows.size());
                bool found = false;
                for (std::size_t k = 0; k + 1 < rows.size() && !found; ++k) {
                    const double z0 = rows[k].zeta_mhz;
                    const double z1 = rows[k + 1].zeta_mhz;
                    if (!std::isnan(z0) && !std::isnan(z1) && (z0 == 0.0 || z0 * z1 < 0.0)) {
                        lo = rows[k].flux;
                        hi = rows[k + 1].flux;
                        found = true;
                    }
                }
                if (!found) {
                    throw PhysicsError("no-sign-change", "zeta does not change sign on 0:0.45:0.01 for " +
                                                             pair.a + "-" + pair.b);
                }
            }
            const auto zero = find_zz_zero(*device, pair, lo, hi, tol_khz, max_evals);
            run.write_json("zz_zero.json", {{"pair", {pair.a, pair.b}},
                                            {"bracket", {lo, hi}},
                                            {"scan_points", scan_points},
                                            {"flux", zero.flux},
                                            {"zeta_khz", 1e3 * zero.zeta_mhz},
                                            {"evaluations", zero.evaluations},
                                            {"degenerate", zero.degenerate}});
        } else if (sub == geff_cmd) {
            const auto pair = parse_pair(pair_text);
            const auto couplers = device->couplers_between(pair.a, pair.b);
            if (couplers.empty()) {
                throw InputError("no-coupler", pair.a + " and " + pair.b + " share no coupler");
            }
            const double flux = coupler_flux.value_or(device->flux_of(couplers.front(), {}));
            EffectiveCouplingOptions options;
            if (!swept.empty()) {
                options.swept = swept;
            }
            options.counter_rotating = counter_rotating;
            const auto g = effective_coupling(*device, pair, flux,
                                              method == "splitting" ? CouplingMethod::splitting
                                                                    : CouplingMethod::perturbative,
                                              options);
            json doc{{"pair", {pair.a, pair.b}}, {"coupler_flux", flux}, {"method", method}, {"g_mhz", g.g_mhz}};
            if (method == "splitting") {
                doc["swept_flux"] = g.swept_flux;
                doc["swept_frequency_ghz"] = g.swept_frequency_ghz;
            }
            run.write_json("geff.json", doc);
        } else if (sub == chevron_cmd) {
            const auto pair = parse_pair(pair_text);
            std::optional<std::string> mob;
            if (!mobile.empty()) {
                mob = mobile;
            }
            const double flux = coupler_flux ? *coupler_flux : cz_coupler_flux(*device, pair, geff_mhz, mob);
            const auto map = chevron_scan(*device, pair, parse_grid(detuning_grid), parse_grid(time_grid), flux,
                                          {mob, Execution::parallel});
            std::string csv = "detuning_mhz,time_ns,p02\r\n";
            for (std::size_t i = 0; i < map.detunings_mhz.size(); ++i) {
                for (std::size_t j = 0; j < map.times_ns.size(); ++j) {
                    csv += number(map.detunings_mhz[i]) + "," + number(map.times_ns[j]) + "," +
                           number(map.at(i, j)) + "\r\n";
                }
            }
            run.write("chevron.csv", csv);
            run.write_json("chevron.json", {{"pair", {pair.a, pair.b}},
                                            {"mobile", map.mobile},
                                            {"coupler_flux", map.coupler_flux},
                                            {"resonance_flux", map.resonance.mobile_flux},
                                            {"lambda_mhz", map.resonance.lambda_mhz},
                                            {"g_eff_mhz", map.resonance.g_eff_mhz}});
        } else if (sub == cz_cal_cmd) {
            const auto pair = parse_pair(pair_text);
            CZOptions options;
            if (!mobile.empty()) {
                options.mobile = mobile;
            }
            options.edge_ns = edge_ns;
            options.evolution.dt = dt;
            const double flux =
                coupler_flux ? *coupler_flux : cz_coupler_flux(*device, pair, geff_mhz, options.mobile);
            run.write_json("cz_calibration.json", calibrate_cz(*device, pair, flux, options).to_json());
        } else if (sub == cz_fid_cmd) {
            const auto cal = load_calibration(calibration_path);
            const auto noise = noise_for(cal.pair, t1_us, tphi_us);
            EvolutionOptions evolution;
            evolution.dt = dt;
            const auto f = gate_fidelity(*device, cal, noise, evolution);
            json doc{{"pair", {cal.pair.a, cal.pair.b}},
                     {"average_fidelity", f.average_fidelity},
                     {"process_fidelity", f.process_fidelity},
                     {"leakage", f.leakage},
                     {"duration_ns", cal.duration_ns},
                     {"t1_us", std::isinf(t1_us) ? json() : json(t1_us)},
                     {"tphi_us", std::isinf(tphi_us) ? json() : json(tphi_us)}};
            doc["coherence_estimate"] =
                noise.is_noiseless() ? json() : json(coherence_limited_fidelity(*device, cal, noise, evolution));
            run.write_json("cz_fidelity.json", doc);
        } else if (sub == rb_cmd) {
            RBOptions options;
            options.seed = derive_seed(seed, {stream_key("rb")});
            options.sequences_per_length = sequences;
            options.bootstrap_resamples = bootstrap;
            if (!lengths_text.empty()) {
                options.lengths.clear();
                for (const auto& item : split(lengths_text, ',')) {
                    options.lengths.push_back(static_cast<int>(parse_number(item, "length")));
                }
            }
            const bool cz_target = rb_mode == "interleaved" && (target == "cz" || !calibration_path.empty());
            if (cz_target && rb_qubits->count() == 0) {
                qubits = 2;
            }
            const int gate_qubits = rb_mode == "simultaneous" ? 1 : qubits;
            GateSet gates;
            gates.qubits = gate_qubits;
            if (depolarizing_p < 1.0 || damping > 0.0) {
                GateChannel noise = depolarizing(gate_qubits, depolarizing_p);
                if (damping > 0.0) {
                    if (gate_qubits != 1) {
                        throw InputError("unsupported-arity", "--damping applies to single-qubit RB");
                    }
                    noise = then(amplitude_damping(damping), noise);
                }
                gates.clifford_noise = noise;
            }
            json doc;
            if (rb_mode == "isolated") {
                doc = run_rb(gates, options).to_json();
            } else if (rb_mode == "simultaneous") {
                SimultaneousContext context{zz_mhz, clifford_ns};
                if (!zz_pair.empty()) {
                    const auto pair = parse_pair(zz_pair);
                    const auto couplers = device->couplers_between(pair.a, pair.b);
                    if (couplers.empty()) {
                        throw InputError("no-coupler", pair.a + " and " + pair.b + " share no coupler");
                    }
                    context.zz_mhz = zz_shift_mhz(*device, pair, device->flux_of(couplers.front(), {}));
                }
                const auto results = run_simultaneous_rb(gates, context, options);
                doc = {{"zz_mhz", context.zz_mhz},
                       {"clifford_duration_ns", context.clifford_duration_ns},
                       {"qubits", {results[0].to_json(), results[1].to_json()}}};
            } else {
                GateChannel gate = identity_channel(gate_qubits);
                if (cz_target && gate_qubits != 2) {
                    throw InputError("arity-mismatch", "interleaved CZ needs --qubits 2");
                }
                if (!calibration_path.empty()) {
                    const auto cal = load_calibration(calibration_path);
                    const auto process = cz_process(*device, cal, noise_for(cal.pair, t1_us, tphi_us));
                    gate = process_channel("CZ", process.superoperator, ideal_cz());
                } else if (target == "cz") {
                    gate = unitary_channel("CZ", ideal_cz());
                }
                if (target_depolarizing < 1.0) {
                    gate = then(gate, depolarizing(gate.qubits, target_depolarizing));
                }
                doc = run_interleaved_rb(gates, gate, options).to_json();
            }
            doc["mode"] = rb_mode;
            run.write_json("rb.json", doc);
        } else if (sub == qst_cmd || sub == bell_cmd) {
            Eigen::Matrix4cd rho = bell_state() * bell_state().adjoint();
            std::optional<CZCalibration> cal;
            if (!calibration_path.empty()) {
                cal = load_calibration(calibration_path);
                BellOptions options;
                options.ideal_cz = use_ideal_cz;
                rho = prepare_bell(*device, cal->pair, *cal, noise_for(cal->pair, t1_us, tphi_us), options);
            }
            if (sub == bell_cmd) {
                run.write_json("bell.json", {{"pair", {cal->pair.a, cal->pair.b}},
                                             {"fidelity", state_fidelity(rho, bell_state())},
                                             {"rho_real", matrix_json(rho, false)},
                                             {"rho_imag", matrix_json(rho, true)}});
            } else {
                const auto result =
                    state_tomography(rho, {shots, derive_seed(seed, {stream_key("qst")})});
                run.write_json("qst.json", result.to_json(state_fidelity(result.rho, bell_state())));
            }
        } else if (sub == w_cmd) {
            const auto targets = split(targets_text, ',');
            EqualizeOptions options;
            if (start_flux) {
                for (const auto& t : targets) {
                    for (const auto& c : device->couplers_between(center, t)) {
                        options.start.set(c, *start_flux);
                    }
                }
            }
            options.target_mhz = target_mhz;
            FluxBias fluxes = options.start;
            json eq_doc;
            if (!no_equalize) {
                const auto eq = equalize_couplings(*device, center, targets, options);
                fluxes = eq.fluxes;
                eq_doc = {{"target_mhz", eq.target_mhz}};
                for (const auto& b : eq.branches) {
                    eq_doc["branches"].push_back({{"target", b.target},
                                                  {"coupler", b.coupler},
                                                  {"coupler_flux", b.coupler_flux},
                                                  {"target_flux", b.target_flux},
                                                  {"g_mhz", b.g_mhz}});
                }
            }
            WStateOptions w_options;
            w_options.check_equalization = !no_equalize;
            const auto trace = wstate_evolution(*device, center, targets, fluxes, parse_grid(w_time), w_options);
            std::string csv = "time_ns";
            for (const auto& id : trace.order) {
                csv += ",p_" + id;
            }
            csv += ",w_fidelity\r\n";
            for (std::size_t j = 0; j < trace.times_ns.size(); ++j) {
                csv += number(trace.times_ns[j]);
                for (const auto& row : trace.populations) {
                    csv += "," + number(row[j]);
                }
                csv += "," + number(trace.w_fidelity[j]) + "\r\n";
            }
            run.write("wstate.csv", csv);
            run.write_json("wstate.json", {{"center", center},
                                           {"targets", targets},
                                           {"couplings_mhz", trace.couplings_mhz},
                                           {"fluxes", fluxes.flux},
                                           {"equalization", eq_doc},
                                           {"t_star_ns", trace.t_star_ns},
                                           {"max_w_fidelity", trace.max_w_fidelity}});
        } else {
            const auto* leaf = sub->get_subcommands().front();
            const bool dot = topo_args.format == "dot";
            if (leaf == topo_validate && !topo_args.graph.empty()) {
                std::ifstream f(topo_args.graph);
                if (!f) {
                    throw InputError("missing-file", "cannot read graph " + topo_args.graph);
                }
                json doc;
                try {
                    doc = json::parse(f);
                } catch (const json::exception& e) {
                    throw InputError("schema", topo_args.graph + ": " + e.what());
                }
                run.write_json("validate.json", validate_topology(topology_from_json(doc)).to_json());
            } else {
                const auto graph = build_topology(topo_args.scheme());
                if (leaf == topo_build) {
                    if (dot) {
                        run.write("topology.dot", topology_to_dot(graph));
                    } else {
                        run.write_json("topology.json", topology_to_json(graph));
                    }
                } else if (leaf == topo_unfold) {
                    const auto layout = unfold_planar(graph);
                    if (dot) {
                        run.write("unfold.dot", layout_to_dot(layout));
                    } else {
                        run.write_json("unfold.json", layout_to_json(layout));
                    }
                } else {
                    run.write_json("validate.json", validate_topology(graph).to_json());
                }
            }
        }
        run.finish(out);
        return 0;
    } catch (const InputError& e) {
        return fail(err, 2, e.code(), e.what());
    } catch (const PhysicsError& e) {
        return fail(err, 3, e.code(), e.what());
    } catch (const Error& e) {
        return fail(err, 1, e.code(), e.what());
    } catch (const std::exception& e) {
        return fail(err, 1, "internal", e.what());
    }
}

}  // namespace stq
