#include "hetlink/graph_io.hpp"

#include "hetlink/errors.hpp"
#include "hetlink/text.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace hetlink {
namespace {

void check_field(const std::string& value, const char* what) {
    if (value.find_first_of("\t\n\r") != std::string::npos) {
        throw DataError(std::string(what) + " contains a tab or newline: '" + value + "'");
    }
}

constexpr const char* kNodesHeader = "id\tlabel\tname\tattrs";
constexpr const char* kEdgesHeader = "src\tdst\tlabel\tweight";

} // namespace

void write_nodes_tsv(std::ostream& out, const HeteroGraph& graph) {
    out << kNodesHeader << '\n';
    for (NodeId v = 0; v < graph.node_count(); ++v) {
        const auto& n = graph.node(v);
        const auto& label = graph.node_labels().name(n.label);
        check_field(label, "node label");
        check_field(n.name, "node name");
        out << v << '\t' << label << '\t' << n.name << '\t';
        if (n.attrs) {
            for (std::size_t i = 0; i < n.attrs->size(); ++i) {
                if (i) out << ',';
                out << format_double((*n.attrs)[i]);
            }
        }
        out << '\n';
    }
}

void write_edges_tsv(std::ostream& out, const HeteroGraph& graph) {
    out << kEdgesHeader << '\n';
    for (const auto& e : graph.edges()) {
        const auto& label = graph.edge_labels().name(e.label);
        check_field(label, "edge label");
        out << e.u << '\t' << e.v << '\t' << label << '\t';
        if (e.weight) out << format_double(*e.weight);
        out << '\n';
    }
}

HeteroGraph read_graph_tsv(std::istream& nodes, std::istream& edges) {
    HeteroGraph graph;
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(nodes, line) || line != kNodesHeader) {
        throw SchemaError("nodes.tsv: expected header '" + std::string(kNodesHeader) + "'");
    }
    while (std::getline(nodes, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() != 4) throw RowError(lineno, "nodes.tsv: expected 4 fields");
        long long id = 0;
        if (!parse_int(fields[0], id) || id != static_cast<long long>(graph.node_count())) {
            throw RowError(lineno, "nodes.tsv: ids must be contiguous from 0");
        }
        std::optional<std::vector<double>> attrs;
        if (!fields[3].empty()) {
            attrs.emplace();
            for (const auto& tok : split(fields[3], ',')) {
                double x = 0;
                if (!parse_double(tok, x)) throw RowError(lineno, "nodes.tsv: bad attribute '" + tok + "'");
                attrs->push_back(x);
            }
        }
        graph.add_node(fields[1], std::move(attrs), fields[2]);
    }

    lineno = 1;
    if (!std::getline(edges, line) || line != kEdgesHeader) {
        throw SchemaError("edges.tsv: expected header '" + std::string(kEdgesHeader) + "'");
    }
    while (std::getline(edges, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() != 4) throw RowError(lineno, "edges.tsv: expected 4 fields");
        long long u = 0;
        long long v = 0;
        if (!parse_int(fields[0], u) || !parse_int(fields[1], v) || u < 0 || v < 0 ||
            u >= static_cast<long long>(graph.node_count()) ||
            v >= static_cast<long long>(graph.node_count())) {
            throw RowError(lineno, "edges.tsv: invalid endpoint");
        }
        std::optional<double> weight;
        if (!fields[3].empty()) {
            double w = 0;
            if (!parse_double(fields[3], w)) throw RowError(lineno, "edges.tsv: bad weight");
            weight = w;
        }
        graph.add_edge(static_cast<NodeId>(u), static_cast<NodeId>(v), fields[2], weight);
    }
    graph.freeze();
    return graph;
}

void save_graph(const std::filesystem::path& dir, const HeteroGraph& graph) {
    std::filesystem::create_directories(dir);
    std::ofstream nodes(dir / "nodes.tsv", std::ios::binary);
    std::ofstream edges(dir / "edges.tsv", std::ios::binary);
    if (!nodes || !edges) throw DataError("cannot write graph to " + dir.string());
    write_nodes_tsv(nodes, graph);
    write_edges_tsv(edges, graph);
}

HeteroGraph load_graph(const std::filesystem::path& dir) {
    std::ifstream nodes(dir / "nodes.tsv", std::ios::binary);
    std::ifstream edges(dir / "edges.tsv", std::ios::binary);
    if (!nodes || !edges) throw DataError("cannot read nodes.tsv/edges.tsv in " + dir.string());
    return read_graph_tsv(nodes, edges);
}

} // namespace hetlink
