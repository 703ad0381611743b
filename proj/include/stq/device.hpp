#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace stq {

enum class ModeKind { qubit, planar_coupler, vertical_coupler };

std::string to_string(ModeKind kind);
ModeKind mode_kind_from_string(const std::string& text);

struct ModeSpec {
    std::string id;
    ModeKind kind = ModeKind::qubit;
    double max_frequency_ghz = 0.0;
    double anharmonicity_ghz = 0.0;
    int levels = 3;
    bool flux_tunable = false;
    double junction_asymmetry = 0.0;  // 0 = symmetric SQUID

    [[nodiscard]] bool is_coupler() const { return kind != ModeKind::qubit; }
};

enum class CouplingScaling { fixed, sqrt_frequency };

struct CouplingSpec {
    std::string a;
    std::string b;
    double g0_ghz = 0.0;
    CouplingScaling scaling = CouplingScaling::fixed;

    [[nodiscard]] bool touches(const std::string& id) const { return a == id || b == id; }
    [[nodiscard]] const std::string& other(const std::string& id) const { return a == id ? b : a; }
};

struct Placement {
    int layer = 0;
    int x = 0;
    int y = 0;

    friend bool operator==(const Placement&, const Placement&) = default;
};

/// Flux assignments in units of the flux quantum, keyed by mode id.
struct FluxBias {
    std::map<std::string, double> flux;

    [[nodiscard]] bool contains(const std::string& id) const { return flux.count(id) != 0; }
    [[nodiscard]] double at(const std::string& id, double fallback = 0.0) const;
    FluxBias& set(const std::string& id, double value);
    /// `this` with every entry of `overrides` applied on top.
    [[nodiscard]] FluxBias merged(const FluxBias& overrides) const;

    friend bool operator==(const FluxBias&, const FluxBias&) = default;
};

/// SQUID flux map: f_max * [cos^2(pi*phi) + d^2 sin^2(pi*phi)]^(1/4).
/// Throws InputError for a fixed-frequency mode.
double frequency_at_flux(const ModeSpec& mode, double flux);

/// Inverse of frequency_at_flux on the principal branch phi in [0, 0.5].
double flux_for_frequency(const ModeSpec& mode, double frequency_ghz);

/// Immutable parametric device description. The constructor validates every
/// structural invariant and throws InputError with a distinct code per
/// violation.
class DeviceSpec {
public:
    DeviceSpec(std::vector<ModeSpec> modes, std::vector<CouplingSpec> couplings,
               std::map<std::string, Placement> placement = {}, FluxBias idle_bias = {});

    [[nodiscard]] const std::vector<ModeSpec>& modes() const { return modes_; }
    [[nodiscard]] const std::vector<CouplingSpec>& couplings() const { return couplings_; }
    [[nodiscard]] const std::map<std::string, Placement>& placement() const { return placement_; }
    [[nodiscard]] const FluxBias& idle_bias() const { return idle_bias_; }

    [[nodiscard]] bool has_mode(const std::string& id) const;
    [[nodiscard]] const ModeSpec& mode(const std::string& id) const;
    [[nodiscard]] std::size_t mode_index(const std::string& id) const;

    /// Flux of a mode under `bias`, falling back to the idle bias, then 0.
    [[nodiscard]] double flux_of(const std::string& id, const FluxBias& bias) const;
    /// Bare mode frequency (GHz) under `bias`.
    [[nodiscard]] double frequency_ghz(const std::string& id, const FluxBias& bias) const;
    /// Coupling strength (GHz) under `bias`, including sqrt-frequency scaling.
    [[nodiscard]] double coupling_ghz(const CouplingSpec& coupling, const FluxBias& bias) const;

    /// Couplers with a coupling edge to both `qa` and `qb`.
    [[nodiscard]] std::vector<std::string> couplers_between(const std::string& qa,
                                                            const std::string& qb) const;
    /// Direct qubit-qubit edge, if any.
    [[nodiscard]] std::optional<CouplingSpec> direct_coupling(const std::string& qa,
                                                              const std::string& qb) const;
    /// The coupling edge between two modes, if any.
    [[nodiscard]] std::optional<CouplingSpec> coupling_between(const std::string& a,
                                                               const std::string& b) const;

    [[nodiscard]] DeviceSpec with_couplings(std::vector<CouplingSpec> couplings) const;
    [[nodiscard]] DeviceSpec with_scaled_couplings(double factor) const;
    [[nodiscard]] DeviceSpec with_uniform_levels(int levels) const;
    [[nodiscard]] DeviceSpec with_idle_bias(FluxBias idle) const;

    friend bool operator==(const DeviceSpec& lhs, const DeviceSpec& rhs);

private:
    void validate() const;

    std::vector<ModeSpec> modes_;
    std::vector<CouplingSpec> couplings_;
    std::map<std::string, Placement> placement_;
    FluxBias idle_bias_;
    std::map<std::string, std::size_t> index_;
};

/// Parses the device-config JSON document. Unknown keys are rejected.
DeviceSpec load_device(const nlohmann::json& document);
DeviceSpec load_device_file(const std::filesystem::path& path);
nlohmann::json save_device(const DeviceSpec& device);

/// Location of the bundled representative configuration.
std::filesystem::path paper_like_config_path();

}  // namespace stq
