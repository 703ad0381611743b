#include "stq/device.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>

#include "stq/errors.hpp"

namespace stq {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& object, std::initializer_list<const char*> allowed,
                         const std::string& where) {
    for (const auto& [key, value] : object.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(),
                                       [&](const char* name) { return key == name; });
        if (!known) {
            throw InputError("schema", "unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
T required(const json& object, const char* key, const std::string& where) {
    if (!object.contains(key)) {
        throw InputError("schema", "missing key '" + std::string(key) + "' in " + where);
    }
    try {
        return object.at(key).get<T>();
    } catch (const json::exception& e) {
        throw InputError("schema", "bad value for '" + std::string(key) + "' in " + where +
                                       ": " + e.what());
    }
}

template <typename T>
T optional_value(const json& object, const char* key, T fallback, const std::string& where) {
    if (!object.contains(key)) {
        return fallback;
    }
    return required<T>(object, key, where);
}

std::string scaling_name(CouplingScaling scaling) {
    return scaling == CouplingScaling::fixed ? "fixed" : "sqrt-frequency";
}

CouplingScaling scaling_from_string(const std::string& text) {
    if (text == "fixed") {
        return CouplingScaling::fixed;
    }
    if (text == "sqrt-frequency") {
        return CouplingScaling::sqrt_frequency;
    }
    throw InputError("schema", "unknown coupling scaling '" + text + "'");
}

}  // namespace

std::string to_string(ModeKind kind) {
    switch (kind) {
        case ModeKind::qubit:
            return "qubit";
        case ModeKind::planar_coupler:
            return "planar-coupler";
        case ModeKind::vertical_coupler:
            return "vertical-coupler";
    }
    return "qubit";
}

ModeKind mode_kind_from_string(const std::string& text) {
    if (text == "qubit") {
        return ModeKind::qubit;
    }
    if (text == "planar-coupler") {
        return ModeKind::planar_coupler;
    }
    if (text == "vertical-coupler") {
        return ModeKind::vertical_coupler;
    }
    throw InputError("schema", "unknown mode kind '" + text + "'");
}

double FluxBias::at(const std::string& id, double fallback) const {
    const auto it = flux.find(id);
    return it == flux.end() ? fallback : it->second;
}

FluxBias& FluxBias::set(const std::string& id, double value) {
    flux[id] = value;
    return *this;
}

FluxBias FluxBias::merged(const FluxBias& overrides) const {
    FluxBias out = *this;
    for (const auto& [id, value] : overrides.flux) {
        out.flux[id] = value;
    }
    return out;
}

double frequency_at_flux(const ModeSpec& mode, double flux) {
    if (!mode.flux_tunable) {
        throw InputError("fixed-frequency-mode",
                         "mode " + mode.id + " is not flux tunable");
    }
    if (!std::isfinite(flux)) {
        throw InputError("non-finite-flux", "non-finite flux for mode " + mode.id);
    }
    const double c = std::cos(std::numbers::pi * flux);
    const double s = std::sin(std::numbers::pi * flux);
    const double d = mode.junction_asymmetry;
    return mode.max_frequency_ghz * std::pow(c * c + d * d * s * s, 0.25);
}

double flux_for_frequency(const ModeSpec& mode, double frequency_ghz) {
    if (!mode.flux_tunable) {
        throw InputError("fixed-frequency-mode",
                         "mode " + mode.id + " is not flux tunable");
    }
    const double d = mode.junction_asymmetry;
    const double min_frequency = mode.max_frequency_ghz * std::sqrt(d);
    if (frequency_ghz > mode.max_frequency_ghz || frequency_ghz < min_frequency) {
        throw PhysicsError("frequency-out-of-range",
                           "mode " + mode.id + " cannot reach " + std::to_string(frequency_ghz) +
                               " GHz");
    }
    const double ratio = std::pow(frequency_ghz / mode.max_frequency_ghz, 4.0);
    // ratio = 1 - (1 - d^2) sin^2(pi*phi)
    const double sin2 = d >= 1.0 ? 0.0 : std::clamp((1.0 - ratio) / (1.0 - d * d), 0.0, 1.0);
    return std::asin(std::sqrt(sin2)) / std::numbers::pi;
}

DeviceSpec::DeviceSpec(std::vector<ModeSpec> modes, std::vector<CouplingSpec> couplings,
                       std::map<std::string, Placement> placement, FluxBias idle_bias)
    : modes_(std::move(modes)),
      couplings_(std::move(couplings)),
      placement_(std::move(placement)),
      idle_bias_(std::move(idle_bias)) {
    for (std::size_t i = 0; i < modes_.size(); ++i) {
        if (!index_.emplace(modes_[i].id, i).second) {
            throw InputError("duplicate-mode-id", "duplicate mode id '" + modes_[i].id + "'");
        }
    }
    validate();
}

void DeviceSpec::validate() const {
    for (const auto& m : modes_) {
        const std::string where = "mode '" + m.id + "'";
        if (m.id.empty()) {
            throw InputError("schema", "mode with empty id");
        }
        if (m.levels < 2) {
            throw InputError("invalid-mode", where + ": levels must be >= 2");
        }
        if (!(m.max_frequency_ghz > 0.0) || !std::isfinite(m.max_frequency_ghz)) {
            throw InputError("invalid-mode", where + ": max_frequency must be > 0");
        }
        if (!(m.anharmonicity_ghz < 0.0)) {
            throw InputError("invalid-mode", where + ": anharmonicity must be negative");
        }
        if (m.junction_asymmetry < 0.0 || m.junction_asymmetry > 1.0) {
            throw InputError("invalid-mode", where + ": junction_asymmetry must lie in [0, 1]");
        }
    }

    std::map<std::string, int> qubit_edges;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& c : couplings_) {
        const std::string where = "coupling " + c.a + "-" + c.b;
        for (const auto* end : {&c.a, &c.b}) {
            if (!has_mode(*end)) {
                throw InputError("dangling-endpoint",
                                 where + ": endpoint '" + *end + "' is not a mode");
            }
        }
        if (c.a == c.b) {
            throw InputError("self-coupling", where + ": endpoints must differ");
        }
        if (!std::isfinite(c.g0_ghz)) {
            throw InputError("invalid-coupling", where + ": g0 must be finite");
        }
        const auto key = std::minmax(c.a, c.b);
        if (!seen.emplace(key.first, key.second).second) {
            throw InputError("duplicate-coupling", where + " is declared twice");
        }
        const auto& ma = mode(c.a);
        const auto& mb = mode(c.b);
        if (c.scaling == CouplingScaling::sqrt_frequency && !ma.is_coupler() && !mb.is_coupler()) {
            throw InputError("invalid-coupling",
                             where + ": sqrt-frequency scaling needs a coupler endpoint");
        }
        if (ma.is_coupler() && !mb.is_coupler()) {
            ++qubit_edges[ma.id];
        }
        if (mb.is_coupler() && !ma.is_coupler()) {
            ++qubit_edges[mb.id];
        }
    }
    for (const auto& m : modes_) {
        if (m.is_coupler() && qubit_edges[m.id] != 2) {
            throw InputError("coupler-arity", "coupler '" + m.id + "' has " +
                                                  std::to_string(qubit_edges[m.id]) +
                                                  " qubit edges, expected 2");
        }
    }

    for (const auto& [id, where] : placement_) {
        if (!has_mode(id)) {
            throw InputError("dangling-placement", "placement references unknown mode '" + id + "'");
        }
    }
    std::set<int> qubit_layers;
    for (const auto& m : modes_) {
        if (!m.is_coupler()) {
            if (const auto it = placement_.find(m.id); it != placement_.end()) {
                qubit_layers.insert(it->second.layer);
            }
        }
    }
    for (const auto& m : modes_) {
        if (!m.is_coupler()) {
            continue;
        }
        std::vector<std::string> qubits;
        for (const auto& c : couplings_) {
            if (c.touches(m.id) && !mode(c.other(m.id)).is_coupler()) {
                qubits.push_back(c.other(m.id));
            }
        }
        const auto own = placement_.find(m.id);
        const auto pa = placement_.find(qubits[0]);
        const auto pb = placement_.find(qubits[1]);
        const bool placed = own != placement_.end() && pa != placement_.end() &&
                            pb != placement_.end();
        if (m.kind == ModeKind::vertical_coupler) {
            if (!placed) {
                throw InputError("missing-placement",
                                 "vertical coupler '" + m.id + "' and its qubits need placement");
            }
            const int layer = own->second.layer;
            const auto [lo, hi] = std::minmax(pa->second.layer, pb->second.layer);
            if (qubit_layers.count(layer) != 0) {
                throw InputError("vertical-coupler-on-qubit-layer",
                                 "vertical coupler '" + m.id + "' sits on qubit layer " +
                                     std::to_string(layer));
            }
            if (!(lo < layer && layer < hi)) {
                throw InputError("vertical-coupler-layer",
                                 "vertical coupler '" + m.id +
                                     "' is not between the layers of its qubits");
            }
        } else if (placed) {
            if (pa->second.layer != pb->second.layer ||
                own->second.layer != pa->second.layer) {
                throw InputError("planar-coupler-layer",
                                 "planar coupler '" + m.id + "' must share a layer with its qubits");
            }
        }
    }

    for (const auto& [id, value] : idle_bias_.flux) {
        if (!has_mode(id)) {
            throw InputError("dangling-bias", "idle_bias references unknown mode '" + id + "'");
        }
        if (!mode(id).flux_tunable) {
            throw InputError("bias-on-fixed-mode",
                             "idle_bias assigns flux to fixed-frequency mode '" + id + "'");
        }
        if (!std::isfinite(value)) {
            throw InputError("non-finite-flux", "idle_bias flux for '" + id + "' is not finite");
        }
    }
}

bool DeviceSpec::has_mode(const std::string& id) const { return index_.count(id) != 0; }

const ModeSpec& DeviceSpec::mode(const std::string& id) const { return modes_[mode_index(id)]; }

std::size_t DeviceSpec::mode_index(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) {
        throw InputError("unknown-mode", "no mode named '" + id + "'");
    }
    return it->second;
}

double DeviceSpec::flux_of(const std::string& id, const FluxBias& bias) const {
    if (bias.contains(id)) {
        return bias.at(id);
    }
    return idle_bias_.at(id, 0.0);
}

double DeviceSpec::frequency_ghz(const std::string& id, const FluxBias& bias) const {
    const auto& m = mode(id);
    if (!m.flux_tunable) {
        return m.max_frequency_ghz;
    }
    return frequency_at_flux(m, flux_of(id, bias));
}

double DeviceSpec::coupling_ghz(const CouplingSpec& coupling, const FluxBias& bias) const {
    if (coupling.scaling == CouplingScaling::fixed) {
        return coupling.g0_ghz;
    }
    double g = coupling.g0_ghz;
    for (const auto* end : {&coupling.a, &coupling.b}) {
        const auto& m = mode(*end);
        if (m.is_coupler() && m.flux_tunable) {
            g *= std::sqrt(frequency_ghz(m.id, bias) / m.max_frequency_ghz);
        }
    }
    return g;
}

std::vector<std::string> DeviceSpec::couplers_between(const std::string& qa,
                                                      const std::string& qb) const {
    std::vector<std::string> out;
    for (const auto& m : modes_) {
        if (m.is_coupler() && coupling_between(m.id, qa) && coupling_between(m.id, qb)) {
            out.push_back(m.id);
        }
    }
    return out;
}

std::optional<CouplingSpec> DeviceSpec::coupling_between(const std::string& a,
                                                         const std::string& b) const {
    for (const auto& c : couplings_) {
        if ((c.a == a && c.b == b) || (c.a == b && c.b == a)) {
            return c;
        }
    }
    return std::nullopt;
}

std::optional<CouplingSpec> DeviceSpec::direct_coupling(const std::string& qa,
                                                        const std::string& qb) const {
    return coupling_between(qa, qb);
}

DeviceSpec DeviceSpec::with_couplings(std::vector<CouplingSpec> couplings) const {
    return DeviceSpec(modes_, std::move(couplings), placement_, idle_bias_);
}

DeviceSpec DeviceSpec::with_scaled_couplings(double factor) const {
    auto couplings = couplings_;
    for (auto& c : couplings) {
        c.g0_ghz *= factor;
    }
    return with_couplings(std::move(couplings));
}

DeviceSpec DeviceSpec::with_uniform_levels(int levels) const {
    auto modes = modes_;
    for (auto& m : modes) {
        m.levels = levels;
    }
    return DeviceSpec(std::move(modes), couplings_, placement_, idle_bias_);
}

DeviceSpec DeviceSpec::with_idle_bias(FluxBias idle) const {
    return DeviceSpec(modes_, couplings_, placement_, std::move(idle));
}

bool operator==(const DeviceSpec& lhs, const DeviceSpec& rhs) {
    const auto same_mode = [](const ModeSpec& a, const ModeSpec& b) {
        return a.id == b.id && a.kind == b.kind && a.max_frequency_ghz == b.max_frequency_ghz &&
               a.anharmonicity_ghz == b.anharmonicity_ghz && a.levels == b.levels &&
               a.flux_tunable == b.flux_tunable && a.junction_asymmetry == b.junction_asymmetry;
    };
    const auto same_coupling = [](const CouplingSpec& a, const CouplingSpec& b) {
        return a.a == b.a && a.b == b.b && a.g0_ghz == b.g0_ghz && a.scaling == b.scaling;
    };
    return std::equal(lhs.modes_.begin(), lhs.modes_.end(), rhs.modes_.begin(), rhs.modes_.end(),
                      same_mode) &&
           std::equal(lhs.couplings_.begin(), lhs.couplings_.end(), rhs.couplings_.begin(),
                      rhs.couplings_.end(), same_coupling) &&
           lhs.placement_ == rhs.placement_ && lhs.idle_bias_ == rhs.idle_bias_;
}

DeviceSpec load_device(const json& document) {
    if (!document.is_object()) {
        throw InputError("schema", "device config must be a JSON object");
    }
    reject_unknown_keys(document, {"modes", "couplings", "placement", "idle_bias"}, "device config");
    if (!document.contains("modes") || !document.at("modes").is_array()) {
        throw InputError("schema", "device config needs a 'modes' array");
    }

    std::vector<ModeSpec> modes;
    for (const auto& entry : document.at("modes")) {
        if (!entry.is_object()) {
            throw InputError("schema", "each mode must be an object");
        }
        const std::string id = required<std::string>(entry, "id", "mode");
        const std::string where = "mode '" + id + "'";
        reject_unknown_keys(entry,
                            {"id", "kind", "max_frequency_ghz", "anharmonicity_ghz", "levels",
                             "flux_tunable", "junction_asymmetry"},
                            where);
        ModeSpec m;
        m.id = id;
        m.kind = mode_kind_from_string(required<std::string>(entry, "kind", where));
        m.max_frequency_ghz = required<double>(entry, "max_frequency_ghz", where);
        m.anharmonicity_ghz = required<double>(entry, "anharmonicity_ghz", where);
        m.levels = optional_value<int>(entry, "levels", 3, where);
        m.flux_tunable = required<bool>(entry, "flux_tunable", where);
        m.junction_asymmetry = optional_value<double>(entry, "junction_asymmetry", 0.0, where);
        modes.push_back(std::move(m));
    }

    std::vector<CouplingSpec> couplings;
    if (document.contains("couplings")) {
        if (!document.at("couplings").is_array()) {
            throw InputError("schema", "'couplings' must be an array");
        }
        for (const auto& entry : document.at("couplings")) {
            if (!entry.is_object()) {
                throw InputError("schema", "each coupling must be an object");
            }
            reject_unknown_keys(entry, {"a", "b", "g0_ghz", "scaling"}, "coupling");
            CouplingSpec c;
            c.a = required<std::string>(entry, "a", "coupling");
            c.b = required<std::string>(entry, "b", "coupling");
            const std::string where = "coupling " + c.a + "-" + c.b;
            c.g0_ghz = required<double>(entry, "g0_ghz", where);
            c.scaling = scaling_from_string(optional_value<std::string>(entry, "scaling", "fixed", where));
            couplings.push_back(std::move(c));
        }
    }

    std::map<std::string, Placement> placement;
    if (document.contains("placement")) {
        if (!document.at("placement").is_object()) {
            throw InputError("schema", "'placement' must be an object");
        }
        for (const auto& [id, entry] : document.at("placement").items()) {
            const std::string where = "placement of '" + id + "'";
            if (!entry.is_object()) {
                throw InputError("schema", where + " must be an object");
            }
            reject_unknown_keys(entry, {"layer", "x", "y"}, where);
            placement[id] = Placement{required<int>(entry, "layer", where),
                                      optional_value<int>(entry, "x", 0, where),
                                      optional_value<int>(entry, "y", 0, where)};
        }
    }

    FluxBias idle;
    if (document.contains("idle_bias")) {
        if (!document.at("idle_bias").is_object()) {
            throw InputError("schema", "'idle_bias' must be an object");
        }
        for (const auto& [id, value] : document.at("idle_bias").items()) {
            if (!value.is_number()) {
                throw InputError("schema", "idle_bias for '" + id + "' must be a number");
            }
            idle.set(id, value.get<double>());
        }
    }

    return DeviceSpec(std::move(modes), std::move(couplings), std::move(placement),
                      std::move(idle));
}

DeviceSpec load_device_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("io", "cannot open device config " + path.string());
    }
    json document;
    try {
        in >> document;
    } catch (const json::parse_error& e) {
        throw InputError("schema", "device config " + path.string() + " is not valid JSON: " +
                                       e.what());
    }
    return load_device(document);
}

json save_device(const DeviceSpec& device) {
    json doc;
    doc["modes"] = json::array();
    for (const auto& m : device.modes()) {
        doc["modes"].push_back({{"id", m.id},
                                {"kind", to_string(m.kind)},
                                {"max_frequency_ghz", m.max_frequency_ghz},
                                {"anharmonicity_ghz", m.anharmonicity_ghz},
                                {"levels", m.levels},
                                {"flux_tunable", m.flux_tunable},
                                {"junction_asymmetry", m.junction_asymmetry}});
    }
    doc["couplings"] = json::array();
    for (const auto& c : device.couplings()) {
        doc["couplings"].push_back(
            {{"a", c.a}, {"b", c.b}, {"g0_ghz", c.g0_ghz}, {"scaling", scaling_name(c.scaling)}});
    }
    doc["placement"] = json::object();
    for (const auto& [id, p] : device.placement()) {
        doc["placement"][id] = {{"layer", p.layer}, {"x", p.x}, {"y", p.y}};
    }
    doc["idle_bias"] = json::object();
    for (const auto& [id, flux] : device.idle_bias().flux) {
        doc["idle_bias"][id] = flux;
    }
    return doc;
}

std::filesystem::path paper_like_config_path() {
    return std::filesystem::path(STQ_SOURCE_DIR) / "configs" / "paper_like.json";
}

}  // namespace stq
