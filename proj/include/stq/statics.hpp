#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stq/device.hpp"
#include "stq/execution.hpp"
#include "stq/hilbert.hpp"

namespace stq {

struct QubitPair {
    std::string a;
    std::string b;

    [[nodiscard]] QubitPair swapped() const { return {b, a}; }
};

/// {a, couplers between a and b..., b}. Throws if the pair shares no edge.
ModeSubset pair_subset(const DeviceSpec& device, const QubitPair& pair);

/// `bias` with every coupler of the pair set to `coupler_flux`.
FluxBias with_pair_coupler_flux(const DeviceSpec& device, const QubitPair& pair,
                                double coupler_flux, FluxBias bias = {});

/// Residual ZZ in MHz: (E11 - E10 - E01 + E00)/2pi from labeled dressed
/// energies. Positive means |11> sits above the sum of single excitations.
/// Throws PhysicsError("near-resonance") if any label overlap is < 0.5.
double zz_shift_mhz(const DeviceSpec& device, const QubitPair& pair, double coupler_flux,
                    const FluxBias& bias = {});

struct ZZResult {
    QubitPair pair;
    double flux = 0.0;
    double zeta_mhz = 0.0;  // NaN where the labels were ambiguous
    bool ambiguous = false;
};

std::vector<ZZResult> zz_scan(const DeviceSpec& device, const QubitPair& pair,
                              const std::vector<double>& flux_grid,
                              Execution policy = Execution::parallel);

struct ZZZero {
    double flux = 0.0;
    double zeta_mhz = 0.0;
    int evaluations = 0;
    bool degenerate = false;  // zeta vanished identically on the bracket
};

/// Bracketed Illinois / bisection hybrid on zeta(flux). Stops at
/// |zeta| < tolerance_khz; at most `max_evaluations` zeta evaluations.
ZZZero find_zz_zero(const DeviceSpec& device, const QubitPair& pair, double lo, double hi,
                    double tolerance_khz = 1.0, int max_evaluations = 100);

enum class CouplingMethod { splitting, perturbative };

struct EffectiveCouplingOptions {
    /// Qubit swept through resonance (splitting). Defaults to the tunable
    /// qubit with the higher bare frequency.
    std::optional<std::string> swept;
    /// Adds the -g1c g2c/2 (1/S1 + 1/S2) counter-rotating correction to the
    /// perturbative formula.
    bool counter_rotating = false;
    /// Extra flux assignments (e.g. qubit detunings) on top of idle.
    FluxBias bias;
    /// Half-width of the swept-frequency window around resonance (GHz).
    double window_ghz = 0.3;
};

struct EffectiveCoupling {
    double g_mhz = 0.0;  // signed: negative when the symmetric state is lower
    double swept_frequency_ghz = 0.0;
    double swept_flux = 0.0;
};

EffectiveCoupling effective_coupling(const DeviceSpec& device, const QubitPair& pair,
                                     double coupler_flux, CouplingMethod method,
                                     const EffectiveCouplingOptions& options = {});

/// Coupler flux at which the splitting-method coupling equals `target_mhz`,
/// by secant iteration from `start_flux`. Used for choosing CZ and W-state
/// working points.
double coupler_flux_for_coupling(const DeviceSpec& device, const QubitPair& pair,
                                 double target_mhz, double start_flux,
                                 const EffectiveCouplingOptions& options = {});

struct AvoidedCrossing {
    double frequency_ghz = 0.0;  // swept mode at the minimum gap
    double flux = 0.0;
    double gap_mhz = 0.0;        // full minimum splitting
    double sign = 1.0;           // -1 when the lower state is the symmetric one
};

/// Minimum splitting, over the swept mode's frequency in [lo_ghz, hi_ghz],
/// between the two eigenvectors carrying the most weight on the bare states
/// `first` and `second`. Coarse scan plus golden-section refinement; throws
/// PhysicsError("not-near-resonant") if the minimum sits on the window edge.
AvoidedCrossing find_avoided_crossing(const DeviceSpec& device, const ModeSubset& subset,
                                      const std::string& swept, const FluxBias& bias,
                                      const Occupation& first, const Occupation& second,
                                      double lo_ghz, double hi_ghz);

struct SpectrumPoint {
    double flux = 0.0;
    double frequency_ghz = 0.0;
};

struct SpectrumCurve {
    std::string coupler;
    std::vector<SpectrumPoint> samples;
    std::vector<double> omitted_fluxes;  // ambiguous labels near resonance
};

/// Dressed 0->1 transition of a coupler over a flux grid (strictly increasing).
SpectrumCurve coupler_spectrum_scan(const DeviceSpec& device, const std::string& coupler,
                                    const std::vector<double>& flux_grid,
                                    Execution policy = Execution::parallel);

}  // namespace stq
