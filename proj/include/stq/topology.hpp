#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace stq {

enum class EdgeClass { planar, vertical, lateral, selective };

std::string to_string(EdgeClass c);

/// Qubit node. `layer` counts qubit layers; physical layer 2*layer, with
/// carrier layer 2*layer + 1 between qubit layers `layer` and `layer + 1`.
/// (x, y) are in-layer lattice coordinates across the whole chip tiling.
struct TopologyNode {
    std::string id;
    std::string chip;
    int layer = 0;
    int x = 0;
    int y = 0;
};

struct TopologyEdge {
    std::string a;
    std::string b;
    EdgeClass cls = EdgeClass::planar;
};

struct TopologyGraph {
    std::vector<TopologyNode> nodes;
    std::vector<TopologyEdge> edges;
    int layers = 1;

    [[nodiscard]] std::size_t count(EdgeClass cls) const;
    [[nodiscard]] const TopologyNode& node(const std::string& id) const;
};

/// Chips tile a chip_rows x chip_cols grid; each holds qubit_rows x
/// qubit_cols qubits on every qubit layer.
struct TopologyScheme {
    int chip_rows = 1;
    int chip_cols = 1;
    int qubit_rows = 1;
    int qubit_cols = 1;
    int layers = 1;
    /// Aligned vertical edges between every pair of adjacent layers.
    bool full_vertical = true;
    /// Extra layer-adjacent links; one that coincides with an aligned
    /// vertical edge replaces it.
    std::vector<std::pair<std::string, std::string>> selective;
};

/// chip_<r>_<c>_L<layer>_q<x>_<y>, with (x, y) inside the chip.
std::string node_id(int chip_row, int chip_col, int layer, int x, int y);

/// Throws InputError("bad-scheme") for counts < 1, InputError("unknown-node")
/// and InputError("selective-not-adjacent") for bad selective edges.
TopologyGraph build_topology(const TopologyScheme& scheme);

struct PlanarLayout {
    TopologyGraph graph;
    std::map<std::string, std::pair<int, int>> position;  // unfolded (x, y)
};

/// Layers placed side by side along x (one blank column between blocks).
PlanarLayout unfold_planar(const TopologyGraph& graph);

struct TopologyViolation {
    std::string kind;
    std::vector<std::string> nodes;
    std::string message;
};

struct TopologyReport {
    std::map<int, int> degree_histogram;
    int max_degree = 0;
    std::vector<TopologyViolation> violations;
    int components = 0;
    bool bipartite = true;

    [[nodiscard]] nlohmann::json to_json() const;
};

/// Diagnoses without throwing: class-specific geometry rules and the degree
/// bound 4 + adjacent carrier layers + incident selective edges.
TopologyReport validate_topology(const TopologyGraph& graph);

nlohmann::json topology_to_json(const TopologyGraph& graph);
/// Reads the export format back (for validating hand-built graphs).
TopologyGraph topology_from_json(const nlohmann::json& document);
nlohmann::json layout_to_json(const PlanarLayout& layout);
std::string topology_to_dot(const TopologyGraph& graph);
std::string layout_to_dot(const PlanarLayout& layout);

}  // namespace stq
