#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stq/device.hpp"
#include "stq/statics.hpp"

namespace stq {

/// One center-target branch at a given coupler flux, with the target tuned
/// onto the dressed single-excitation resonance.
struct BranchCoupling {
    std::string target;
    std::string coupler;
    double coupler_flux = 0.0;
    double target_flux = 0.0;    // puts the target on resonance with the center
    double g_mhz = 0.0;          // signed; magnitude from the vacuum-Rabi trace
    double splitting_mhz = 0.0;  // signed, from the avoided crossing
};

/// Vacuum-Rabi coupling of one branch: the center starts excited, the target
/// is switched onto resonance, and g = 1/(4 t_first_max) is read off the
/// target population trace; the sign comes from the avoided crossing.
BranchCoupling measure_branch(const DeviceSpec& device, const std::string& center,
                              const std::string& target, double coupler_flux);

struct EqualizeOptions {
    /// Starting coupler flux per branch; missing entries start at idle.
    FluxBias start;
    /// Common signed coupling to reach; unset means "match the slowest
    /// branch at the starting fluxes".
    std::optional<double> target_mhz;
    double tolerance = 0.01;  // relative
    int max_iterations = 40;
};

struct Equalization {
    FluxBias fluxes;  // coupler fluxes only
    std::vector<BranchCoupling> branches;
    double target_mhz = 0.0;
};

Equalization equalize_couplings(const DeviceSpec& device, const std::string& center,
                                const std::vector<std::string>& targets,
                                const EqualizeOptions& options = {});

struct WStateOptions {
    /// Relative spread of |g| tolerated before reporting unequal couplings.
    double equalization_tolerance = 0.05;
    bool check_equalization = true;
};

struct WStateTrace {
    std::vector<std::string> order;  // mode order of the occupation kets
    std::string center;
    std::vector<std::string> targets;
    std::vector<double> couplings_mhz;  // per target
    std::vector<double> times_ns;
    /// populations[k][j]: single excitation on order[k] at times_ns[j].
    std::vector<std::vector<double>> populations;
    std::vector<double> w_fidelity;
    double t_star_ns = 0.0;
    double max_w_fidelity = 0.0;
};

/// Joint evolution from the center excited, on the resonant exchange model
/// built from the branch couplings at `equalized_fluxes`. W is the equal
/// superposition of single excitations on the targets.
WStateTrace wstate_evolution(const DeviceSpec& device, const std::string& center,
                             const std::vector<std::string>& targets,
                             const FluxBias& equalized_fluxes, const std::vector<double>& times_ns,
                             const WStateOptions& options = {});

/// Same evolution for explicitly given signed couplings (MHz), sharing one
/// frequency and the center's anharmonicity.
WStateTrace star_evolution(const DeviceSpec& device, const std::string& center,
                           const std::vector<std::string>& targets,
                           const std::vector<double>& couplings_mhz,
                           const std::vector<double>& times_ns);

}  // namespace stq
