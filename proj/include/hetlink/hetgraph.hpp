#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace hetlink {

using NodeId = std::uint32_t;
using EdgeIndex = std::uint32_t;
using LabelId = std::uint32_t;

/// Interned label names. Ids are dense and assigned in first-seen order.
class LabelAlphabet {
public:
    LabelId intern(std::string_view name);
    std::optional<LabelId> find(std::string_view name) const;
    const std::string& name(LabelId id) const { return names_.at(id); }
    std::size_t size() const noexcept { return names_.size(); }
    const std::vector<std::string>& names() const noexcept { return names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, LabelId> index_;
};

struct Node {
    LabelId label = 0;
    std::optional<std::vector<double>> attrs;
    std::string name;
};

struct Edge {
    NodeId u = 0;
    NodeId v = 0;
    LabelId label = 0;
    std::optional<double> weight;

    bool self_loop() const noexcept { return u == v; }
    NodeId other(NodeId x) const noexcept { return x == u ? v : u; }
};

struct Adjacent {
    NodeId node;
    EdgeIndex edge;
};

struct LabelCounts {
    std::map<std::string, std::size_t> nodes;
    std::map<std::string, std::size_t> edges;
};

/// Node/edge-labelled, optionally attributed, undirected multigraph.
///
/// Built with add_node/add_edge, then frozen. Frozen graphs reject mutation
/// and are safe to share across threads. Adjacency lists are kept sorted by
/// (neighbor id, edge index) so every traversal order is reproducible.
/// Self-loops are stored and appear twice in their node's adjacency.
class HeteroGraph {
public:
    NodeId add_node(std::string_view label, std::optional<std::vector<double>> attrs = std::nullopt,
                    std::string name = {});
    EdgeIndex add_edge(NodeId u, NodeId v, std::string_view label,
                       std::optional<double> weight = std::nullopt);

    void freeze() noexcept { frozen_ = true; }
    bool frozen() const noexcept { return frozen_; }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }

    const Node& node(NodeId v) const;
    const Edge& edge(EdgeIndex e) const;
    std::span<const Node> nodes() const noexcept { return nodes_; }
    std::span<const Edge> edges() const noexcept { return edges_; }
    std::span<const Adjacent> adjacency(NodeId v) const;

    /// Neighbors in ascending id order, optionally filtered by edge and/or neighbor label.
    std::vector<NodeId> neighbors(NodeId v, std::optional<LabelId> edge_label = std::nullopt,
                                  std::optional<LabelId> node_label = std::nullopt) const;
    /// Name-based filter; an empty string means "no filter", an unknown name matches nothing.
    std::vector<NodeId> neighbors(NodeId v, std::string_view edge_label,
                                  std::string_view node_label) const;

    bool has_edge(NodeId u, NodeId v) const;
    std::size_t self_loop_count() const noexcept { return self_loops_; }

    const LabelAlphabet& node_labels() const noexcept { return node_labels_; }
    const LabelAlphabet& edge_labels() const noexcept { return edge_labels_; }
    const std::string& label_name(NodeId v) const { return node_labels_.name(node(v).label); }
    std::optional<std::size_t> attribute_dim(LabelId label) const;

    /// First node with the given label and display name.
    std::optional<NodeId> find_node(std::string_view label, std::string_view name) const;
    std::vector<NodeId> nodes_with_label(LabelId label) const;

    /// Copy restricted to `ids` (duplicates ignored), re-indexed by ascending original id.
    HeteroGraph induced_subgraph(std::span<const NodeId> ids) const;
    /// Copy with the same nodes and only the edges for which keep[e] is true.
    HeteroGraph filter_edges(const std::vector<bool>& keep) const;
    /// Unfrozen copy, for building an extended graph (e.g. attaching a new node).
    HeteroGraph thawed_copy() const;

    LabelCounts count_by_label() const;

private:
    void require_mutable() const;
    void check_node(NodeId v) const;

    bool frozen_ = false;
    LabelAlphabet node_labels_;
    LabelAlphabet edge_labels_;
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::vector<Adjacent>> adjacency_;
    std::vector<std::optional<std::size_t>> attr_dims_;
    std::size_t self_loops_ = 0;
};

} // namespace hetlink
