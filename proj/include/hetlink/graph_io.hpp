#pragma once

#include "hetlink/hetgraph.hpp"

#include <filesystem>
#include <iosfwd>

namespace hetlink {

// Two-file plain-text graph format:
//   nodes.tsv  id, label, name, attrs (comma-joined shortest round-trip decimals)
//   edges.tsv  src, dst, label, weight (empty when absent)
// Both files start with a header row. Writing a graph read from these files
// reproduces them byte for byte.

void write_nodes_tsv(std::ostream& out, const HeteroGraph& graph);
void write_edges_tsv(std::ostream& out, const HeteroGraph& graph);
HeteroGraph read_graph_tsv(std::istream& nodes, std::istream& edges);

void save_graph(const std::filesystem::path& dir, const HeteroGraph& graph);
HeteroGraph load_graph(const std::filesystem::path& dir);

} // namespace hetlink
