#include "stq/topology.hpp"

#include <algorithm>
#include <cstdlib>
#include <queue>
#include <set>
#include <sstream>

#include "stq/errors.hpp"

namespace stq {

namespace {

std::map<std::string, std::size_t> index_nodes(const TopologyGraph& graph) {
    std::map<std::string, std::size_t> index;
    for (std::size_t k = 0; k < graph.nodes.size(); ++k) {
        index.emplace(graph.nodes[k].id, k);
    }
    return index;
}

std::pair<std::string, std::string> ordered(const std::string& a, const std::string& b) {
    return a < b ? std::pair{a, b} : std::pair{b, a};
}

const char* dot_style(EdgeClass c) {
    switch (c) {
        case EdgeClass::planar:
            return "style=solid";
        case EdgeClass::vertical:
            return "style=bold,color=orange";
        case EdgeClass::lateral:
            return "style=dashed,color=blue";
        case EdgeClass::selective:
            return "style=dashed,color=red";
    }
    return "";
}

nlohmann::json edges_json(const std::vector<TopologyEdge>& edges) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& e : edges) {
        out.push_back({{"a", e.a}, {"b", e.b}, {"class", to_string(e.cls)}});
    }
    return out;
}

std::string dot(const TopologyGraph& graph, const std::map<std::string, std::pair<int, int>>& pos) {
    std::ostringstream os;
    os << "graph topology {\n";
    for (const auto& n : graph.nodes) {
        const auto [x, y] = pos.at(n.id);
        os << "  \"" << n.id << "\" [pos=\"" << x << "," << y << "!\"];\n";
    }
    for (const auto& e : graph.edges) {
        os << "  \"" << e.a << "\" -- \"" << e.b << "\" [" << dot_style(e.cls) << "];\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace

std::string to_string(EdgeClass c) {
    switch (c) {
        case EdgeClass::planar:
            return "planar";
        case EdgeClass::vertical:
            return "vertical";
        case EdgeClass::lateral:
            return "lateral";
        case EdgeClass::selective:
            return "selective";
    }
    return "unknown";
}

std::size_t TopologyGraph::count(EdgeClass cls) const {
    return static_cast<std::size_t>(
        std::count_if(edges.begin(), edges.end(), [&](const TopologyEdge& e) { return e.cls == cls; }));
}

const TopologyNode& TopologyGraph::node(const std::string& id) const {
    const auto it = std::find_if(nodes.begin(), nodes.end(), [&](const TopologyNode& n) { return n.id == id; });
    if (it == nodes.end()) {
        throw InputError("unknown-node", "no node '" + id + "'");
    }
    return *it;
}

std::string node_id(int chip_row, int chip_col, int layer, int x, int y) {
    return "chip_" + std::to_string(chip_row) + "_" + std::to_string(chip_col) + "_L" +
           std::to_string(layer) + "_q" + std::to_string(x) + "_" + std::to_string(y);
}

TopologyGraph build_topology(const TopologyScheme& s) {
    if (s.chip_rows < 1 || s.chip_cols < 1 || s.qubit_rows < 1 || s.qubit_cols < 1 || s.layers < 1) {
        throw InputError("bad-scheme", "chip, qubit and layer counts must all be >= 1");
    }
    TopologyGraph g;
    g.layers = s.layers;
    const auto id = [&](int l, int gx, int gy) {
        return node_id(gy / s.qubit_rows, gx / s.qubit_cols, l, gx % s.qubit_cols, gy % s.qubit_rows);
    };
    const int width = s.chip_cols * s.qubit_cols;
    const int height = s.chip_rows * s.qubit_rows;
    for (int l = 0; l < s.layers; ++l) {
        for (int gy = 0; gy < height; ++gy) {
            for (int gx = 0; gx < width; ++gx) {
                const std::string chip =
                    "chip_" + std::to_string(gy / s.qubit_rows) + "_" + std::to_string(gx / s.qubit_cols);
                g.nodes.push_back({id(l, gx, gy), chip, l, gx, gy});
            }
        }
    }
    // In-layer neighbours: planar inside a chip, lateral across a boundary.
    for (int l = 0; l < s.layers; ++l) {
        for (int gy = 0; gy < height; ++gy) {
            for (int gx = 0; gx < width; ++gx) {
                if (gx + 1 < width) {
                    const bool boundary = (gx + 1) % s.qubit_cols == 0;
                    g.edges.push_back({id(l, gx, gy), id(l, gx + 1, gy),
                                       boundary ? EdgeClass::lateral : EdgeClass::planar});
                }
                if (gy + 1 < height) {
                    const bool boundary = (gy + 1) % s.qubit_rows == 0;
                    g.edges.push_back({id(l, gx, gy), id(l, gx, gy + 1),
                                       boundary ? EdgeClass::lateral : EdgeClass::planar});
                }
            }
        }
    }
    const auto index = index_nodes(g);
    std::set<std::pair<std::string, std::string>> selective;
    for (const auto& [a, b] : s.selective) {
        for (const auto* end : {&a, &b}) {
            if (!index.count(*end)) {
                throw InputError("unknown-node", "selective edge references unknown node '" + *end + "'");
            }
        }
        if (std::abs(g.nodes[index.at(a)].layer - g.nodes[index.at(b)].layer) != 1) {
            throw InputError("selective-not-adjacent",
                             "selective edge " + a + " - " + b + " does not join adjacent qubit layers");
        }
        selective.insert(ordered(a, b));
    }
    if (s.full_vertical) {
        for (int l = 0; l + 1 < s.layers; ++l) {
            for (int gy = 0; gy < height; ++gy) {
                for (int gx = 0; gx < width; ++gx) {
                    const auto a = id(l, gx, gy);
                    const auto b = id(l + 1, gx, gy);
                    if (!selective.count(ordered(a, b))) {
                        g.edges.push_back({a, b, EdgeClass::vertical});
                    }
                }
            }
        }
    }
    for (const auto& [a, b] : s.selective) {
        g.edges.push_back({a, b, EdgeClass::selective});
    }
    return g;
}

PlanarLayout unfold_planar(const TopologyGraph& graph) {
    PlanarLayout out;
    out.graph = graph;
    int width = 0;
    for (const auto& n : graph.nodes) {
        width = std::max(width, n.x + 1);
    }
    for (const auto& n : graph.nodes) {
        out.position[n.id] = {n.layer * (width + 1) + n.x, n.y};
    }
    return out;
}

TopologyReport validate_topology(const TopologyGraph& graph) {
    TopologyReport report;
    const auto index = index_nodes(graph);
    const std::size_t n = graph.nodes.size();
    std::vector<int> degree(n, 0);
    std::vector<int> selective_degree(n, 0);
    std::vector<std::vector<std::size_t>> adjacency(n);
    const auto violation = [&](const std::string& kind, const TopologyEdge& e, const std::string& why) {
        report.violations.push_back({kind, {e.a, e.b}, to_string(e.cls) + " edge " + e.a + " - " + e.b + " " + why});
    };
    for (const auto& e : graph.edges) {
        if (!index.count(e.a) || !index.count(e.b)) {
            report.violations.push_back({"dangling-edge", {e.a, e.b}, "edge references an unknown node"});
            continue;
        }
        const auto ia = index.at(e.a);
        const auto ib = index.at(e.b);
        const auto& a = graph.nodes[ia];
        const auto& b = graph.nodes[ib];
        const int lattice = std::abs(a.x - b.x) + std::abs(a.y - b.y);
        switch (e.cls) {
            case EdgeClass::planar:
                if (a.layer != b.layer || a.chip != b.chip || lattice != 1) {
                    violation("planar-geometry", e, "is not a same-chip lattice neighbour pair");
                }
                break;
            case EdgeClass::lateral:
                if (a.layer != b.layer || a.chip == b.chip || lattice != 1) {
                    violation("lateral-geometry", e, "does not join neighbouring boundary qubits of two chips");
                }
                break;
            case EdgeClass::vertical:
                if (std::abs(a.layer - b.layer) != 1) {
                    violation("layer-adjacency", e, "skips a layer");
                } else if (a.x != b.x || a.y != b.y) {
                    violation("vertical-alignment", e, "joins misaligned qubits");
                }
                break;
            case EdgeClass::selective:
                if (std::abs(a.layer - b.layer) != 1) {
                    violation("layer-adjacency", e, "skips a layer");
                }
                ++selective_degree[ia];
                ++selective_degree[ib];
                break;
        }
        ++degree[ia];
        ++degree[ib];
        adjacency[ia].push_back(ib);
        adjacency[ib].push_back(ia);
    }
    for (std::size_t k = 0; k < n; ++k) {
        const auto& node = graph.nodes[k];
        ++report.degree_histogram[degree[k]];
        report.max_degree = std::max(report.max_degree, degree[k]);
        const int carriers = static_cast<int>(node.layer > 0) + static_cast<int>(node.layer + 1 < graph.layers);
        const int bound = 4 + carriers + selective_degree[k];
        if (degree[k] > bound) {
            report.violations.push_back({"degree", {node.id},
                                         node.id + " has degree " + std::to_string(degree[k]) +
                                             " above the bound " + std::to_string(bound)});
        }
    }
    // Components and two-colouring by breadth-first search.
    std::vector<int> colour(n, -1);
    for (std::size_t start = 0; start < n; ++start) {
        if (colour[start] >= 0) {
            continue;
        }
        ++report.components;
        colour[start] = 0;
        std::queue<std::size_t> queue;
        queue.push(start);
        while (!queue.empty()) {
            const auto k = queue.front();
            queue.pop();
            for (const auto j : adjacency[k]) {
                if (colour[j] < 0) {
                    colour[j] = 1 - colour[k];
                    queue.push(j);
                } else if (colour[j] == colour[k]) {
                    report.bipartite = false;
                }
            }
        }
    }
    return report;
}

nlohmann::json TopologyReport::to_json() const {
    nlohmann::json hist = nlohmann::json::object();
    for (const auto& [d, c] : degree_histogram) {
        hist[std::to_string(d)] = c;
    }
    nlohmann::json v = nlohmann::json::array();
    for (const auto& x : violations) {
        v.push_back({{"kind", x.kind}, {"nodes", x.nodes}, {"message", x.message}});
    }
    return {{"degree_histogram", hist}, {"max_degree", max_degree}, {"violations", v},
            {"components", components}, {"bipartite", bipartite}};
}

nlohmann::json topology_to_json(const TopologyGraph& graph) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : graph.nodes) {
        nodes.push_back({{"id", n.id}, {"layer", n.layer}, {"x", n.x}, {"y", n.y}, {"chip", n.chip}});
    }
    return {{"layers", graph.layers}, {"nodes", nodes}, {"edges", edges_json(graph.edges)}};
}

TopologyGraph topology_from_json(const nlohmann::json& document) {
    try {
        TopologyGraph g;
        g.layers = document.value("layers", 1);
        for (const auto& n : document.at("nodes")) {
            g.nodes.push_back({n.at("id").get<std::string>(), n.value("chip", std::string{}),
                               n.at("layer").get<int>(), n.at("x").get<int>(), n.at("y").get<int>()});
            g.layers = std::max(g.layers, g.nodes.back().layer + 1);
        }
        const std::map<std::string, EdgeClass> classes{{"planar", EdgeClass::planar},
                                                       {"vertical", EdgeClass::vertical},
                                                       {"lateral", EdgeClass::lateral},
                                                       {"selective", EdgeClass::selective}};
        for (const auto& e : document.at("edges")) {
            const auto cls = e.at("class").get<std::string>();
            if (!classes.count(cls)) {
                throw InputError("bad-edge-class", "unknown edge class '" + cls + "'");
            }
            g.edges.push_back({e.at("a").get<std::string>(), e.at("b").get<std::string>(), classes.at(cls)});
        }
        return g;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("schema", std::string("topology document: ") + e.what());
    }
}

nlohmann::json layout_to_json(const PlanarLayout& layout) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : layout.graph.nodes) {
        const auto [x, y] = layout.position.at(n.id);
        nodes.push_back({{"id", n.id}, {"layer", n.layer}, {"x", x}, {"y", y}, {"chip", n.chip}});
    }
    return {{"layers", layout.graph.layers}, {"nodes", nodes}, {"edges", edges_json(layout.graph.edges)}};
}

std::string topology_to_dot(const TopologyGraph& graph) {
    std::map<std::string, std::pair<int, int>> pos;
    for (const auto& n : graph.nodes) {
        pos[n.id] = {n.x, n.y};
    }
    return dot(graph, pos);
}

std::string layout_to_dot(const PlanarLayout& layout) {
    return dot(layout.graph, layout.position);
}

}  // namespace stq
