#include "hetlink/hetgraph.hpp"

#include "hetlink/errors.hpp"

#include <algorithm>
#include <stdexcept>

namespace hetlink {

LabelId LabelAlphabet::intern(std::string_view name) {
    std::string key(name);
    if (auto it = index_.find(key); it != index_.end()) return it->second;
    auto id = static_cast<LabelId>(names_.size());
    names_.push_back(key);
    index_.emplace(std::move(key), id);
    return id;
}

std::optional<LabelId> LabelAlphabet::find(std::string_view name) const {
    if (auto it = index_.find(std::string(name)); it != index_.end()) return it->second;
    return std::nullopt;
}

void HeteroGraph::require_mutable() const {
    if (frozen_) throw std::logic_error("graph is frozen");
}

void HeteroGraph::check_node(NodeId v) const {
    if (v >= nodes_.size()) {
        throw std::out_of_range("node id " + std::to_string(v) + " out of range (|V|=" +
                                std::to_string(nodes_.size()) + ")");
    }
}

NodeId HeteroGraph::add_node(std::string_view label, std::optional<std::vector<double>> attrs,
                             std::string name) {
    require_mutable();
    if (attrs && attrs->empty()) attrs.reset();
    auto lid = node_labels_.find(label);
    if (lid && attrs && *lid < attr_dims_.size() && attr_dims_[*lid] &&
        *attr_dims_[*lid] != attrs->size()) {
        throw DimensionMismatch("attribute dimension " + std::to_string(attrs->size()) +
                                " conflicts with " + std::to_string(*attr_dims_[*lid]) +
                                " for label '" + std::string(label) + "'");
    }
    LabelId id = node_labels_.intern(label);
    if (attr_dims_.size() <= id) attr_dims_.resize(id + 1);
    if (attrs && !attr_dims_[id]) attr_dims_[id] = attrs->size();

    auto v = static_cast<NodeId>(nodes_.size());
    nodes_.push_back(Node{id, std::move(attrs), std::move(name)});
    adjacency_.emplace_back();
    return v;
}

EdgeIndex HeteroGraph::add_edge(NodeId u, NodeId v, std::string_view label,
                                std::optional<double> weight) {
    require_mutable();
    check_node(u);
    check_node(v);
    auto e = static_cast<EdgeIndex>(edges_.size());
    edges_.push_back(Edge{u, v, edge_labels_.intern(label), weight});

    // e is the largest edge index so far, so upper_bound on the neighbor id
    // keeps each list sorted by (neighbor, edge).
    auto insert = [&](NodeId at, NodeId nb) {
        auto& list = adjacency_[at];
        auto pos = std::upper_bound(list.begin(), list.end(), nb,
                                    [](NodeId x, const Adjacent& a) { return x < a.node; });
        list.insert(pos, Adjacent{nb, e});
    };
    insert(u, v);
    insert(v, u);
    if (u == v) ++self_loops_;
    return e;
}

const Node& HeteroGraph::node(NodeId v) const {
    check_node(v);
    return nodes_[v];
}

const Edge& HeteroGraph::edge(EdgeIndex e) const {
    if (e >= edges_.size()) throw std::out_of_range("edge index " + std::to_string(e) + " out of range");
    return edges_[e];
}

std::span<const Adjacent> HeteroGraph::adjacency(NodeId v) const {
    check_node(v);
    return adjacency_[v];
}

std::vector<NodeId> HeteroGraph::neighbors(NodeId v, std::optional<LabelId> edge_label,
                                           std::optional<LabelId> node_label) const {
    check_node(v);
    std::vector<NodeId> out;
    out.reserve(adjacency_[v].size());
    for (const auto& a : adjacency_[v]) {
        if (edge_label && edges_[a.edge].label != *edge_label) continue;
        if (node_label && nodes_[a.node].label != *node_label) continue;
        out.push_back(a.node);
    }
    return out;
}

std::vector<NodeId> HeteroGraph::neighbors(NodeId v, std::string_view edge_label,
                                           std::string_view node_label) const {
    std::optional<LabelId> el;
    std::optional<LabelId> nl;
    if (!edge_label.empty()) {
        el = edge_labels_.find(edge_label);
        if (!el) {
            check_node(v);
            return {};
        }
    }
    if (!node_label.empty()) {
        nl = node_labels_.find(node_label);
        if (!nl) {
            check_node(v);
            return {};
        }
    }
    return neighbors(v, el, nl);
}

bool HeteroGraph::has_edge(NodeId u, NodeId v) const {
    check_node(u);
    check_node(v);
    const auto& list = adjacency_[u];
    auto it = std::lower_bound(list.begin(), list.end(), v,
                               [](const Adjacent& a, NodeId x) { return a.node < x; });
    return it != list.end() && it->node == v;
}

std::optional<std::size_t> HeteroGraph::attribute_dim(LabelId label) const {
    if (label >= attr_dims_.size()) return std::nullopt;
    return attr_dims_[label];
}

std::optional<NodeId> HeteroGraph::find_node(std::string_view label, std::string_view name) const {
    auto lid = node_labels_.find(label);
    if (!lid) return std::nullopt;
    for (NodeId v = 0; v < nodes_.size(); ++v) {
        if (nodes_[v].label == *lid && nodes_[v].name == name) return v;
    }
    return std::nullopt;
}

std::vector<NodeId> HeteroGraph::nodes_with_label(LabelId label) const {
    std::vector<NodeId> out;
    for (NodeId v = 0; v < nodes_.size(); ++v) {
        if (nodes_[v].label == label) out.push_back(v);
    }
    return out;
}

HeteroGraph HeteroGraph::induced_subgraph(std::span<const NodeId> ids) const {
    std::vector<NodeId> keep(ids.begin(), ids.end());
    for (auto v : keep) check_node(v);
    std::sort(keep.begin(), keep.end());
    keep.erase(std::unique(keep.begin(), keep.end()), keep.end());

    constexpr auto absent = static_cast<NodeId>(-1);
    std::vector<NodeId> remap(nodes_.size(), absent);
    HeteroGraph sub;
    for (auto v : keep) {
        const auto& n = nodes_[v];
        remap[v] = sub.add_node(node_labels_.name(n.label), n.attrs, n.name);
    }
    for (const auto& e : edges_) {
        if (remap[e.u] == absent || remap[e.v] == absent) continue;
        sub.add_edge(remap[e.u], remap[e.v], edge_labels_.name(e.label), e.weight);
    }
    sub.freeze();
    return sub;
}

HeteroGraph HeteroGraph::filter_edges(const std::vector<bool>& keep) const {
    if (keep.size() != edges_.size()) {
        throw DimensionMismatch("edge mask has " + std::to_string(keep.size()) + " entries, graph has " +
                                std::to_string(edges_.size()) + " edges");
    }
    HeteroGraph out;
    for (const auto& n : nodes_) out.add_node(node_labels_.name(n.label), n.attrs, n.name);
    for (EdgeIndex e = 0; e < edges_.size(); ++e) {
        if (!keep[e]) continue;
        const auto& ed = edges_[e];
        out.add_edge(ed.u, ed.v, edge_labels_.name(ed.label), ed.weight);
    }
    out.freeze();
    return out;
}

HeteroGraph HeteroGraph::thawed_copy() const {
    HeteroGraph out = *this;
    out.frozen_ = false;
    return out;
}

LabelCounts HeteroGraph::count_by_label() const {
    LabelCounts counts;
    for (const auto& n : nodes_) ++counts.nodes[node_labels_.name(n.label)];
    for (const auto& e : edges_) ++counts.edges[edge_labels_.name(e.label)];
    return counts;
}

} // namespace hetlink
