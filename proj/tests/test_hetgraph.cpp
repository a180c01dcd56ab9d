#include "hetlink/errors.hpp"
#include "hetlink/graph_io.hpp"
#include "hetlink/hetgraph.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

using namespace hetlink;

namespace {

std::set<std::pair<NodeId, NodeId>> edge_set(const HeteroGraph& g) {
    std::set<std::pair<NodeId, NodeId>> out;
    for (const auto& e : g.edges()) out.insert({std::min(e.u, e.v), std::max(e.u, e.v)});
    return out;
}

std::string dump(const HeteroGraph& g) {
    std::ostringstream out;
    write_nodes_tsv(out, g);
    write_edges_tsv(out, g);
    return out.str();
}

} // namespace

TEST_CASE("node ids are contiguous from zero") {
    HeteroGraph g;
    CHECK(g.add_node("A") == 0);
    CHECK(g.add_node("B") == 1);
    CHECK(g.node_count() == 2);
    CHECK(g.node_labels().size() == 2);
}

TEST_CASE("attribute dimension is fixed per label") {
    HeteroGraph g;
    g.add_node("A", std::vector<double>{1, 2});
    CHECK_THROWS_AS(g.add_node("A", std::vector<double>{1, 2, 3}), DimensionMismatch);
    CHECK_NOTHROW(g.add_node("B", std::vector<double>{1, 2, 3}));
    CHECK(g.attribute_dim(*g.node_labels().find("A")) == 2u);
}

TEST_CASE("edges are undirected and multigraph") {
    HeteroGraph g;
    g.add_node("A");
    g.add_node("B");
    g.add_edge(0, 1, "Expresses");
    CHECK(g.neighbors(0) == std::vector<NodeId>{1});
    CHECK(g.neighbors(1) == std::vector<NodeId>{0});
    g.add_edge(0, 1, "Expresses");
    CHECK(g.adjacency(0).size() == 2);
    CHECK(g.adjacency(1).size() == 2);
    CHECK_THROWS_AS(g.add_edge(0, 99, "x"), std::out_of_range);
}

TEST_CASE("self loops are stored and counted") {
    HeteroGraph g;
    g.add_node("A");
    g.add_edge(0, 0, "loop");
    CHECK(g.self_loop_count() == 1);
    CHECK(g.adjacency(0).size() == 2);
}

TEST_CASE("neighbor queries") {
    HeteroGraph star;
    star.add_node("Center");
    for (int i = 0; i < 3; ++i) star.add_edge(0, star.add_node("Leaf"), "spoke");
    CHECK(star.neighbors(0).size() == 3);
    CHECK(star.neighbors(0, "nope", "").empty());
    CHECK(star.neighbors(0, "spoke", "Leaf").size() == 3);

    HeteroGraph path;
    for (int i = 0; i < 3; ++i) path.add_node("N");
    path.add_edge(1, 2, "e");
    path.add_edge(1, 0, "e");
    CHECK(path.neighbors(1) == std::vector<NodeId>{0, 2});
}

TEST_CASE("frozen graphs reject mutation") {
    HeteroGraph g;
    g.add_node("A");
    g.freeze();
    CHECK_THROWS_AS(g.add_node("A"), std::logic_error);
    auto copy = g.thawed_copy();
    CHECK_NOTHROW(copy.add_node("A"));
}

TEST_CASE("induced subgraph edge cases") {
    HeteroGraph tri;
    for (int i = 0; i < 3; ++i) tri.add_node("N", std::vector<double>{double(i)}, "n" + std::to_string(i));
    tri.add_edge(0, 1, "e");
    tri.add_edge(1, 2, "e");
    tri.add_edge(0, 2, "e");
    tri.freeze();

    std::vector<NodeId> all{0, 1, 2};
    CHECK(dump(tri.induced_subgraph(all)) == dump(tri));
    CHECK(tri.induced_subgraph(std::vector<NodeId>{}).node_count() == 0);
    std::vector<NodeId> two{2, 0};
    auto sub = tri.induced_subgraph(two);
    CHECK(sub.edge_count() == 1);
    CHECK(sub.node(1).name == "n2");
    CHECK((*sub.node(1).attrs)[0] == 2.0);
    std::vector<NodeId> bad{5};
    CHECK_THROWS_AS(tri.induced_subgraph(bad), std::out_of_range);
}

TEST_CASE("count_by_label totals") {
    HeteroGraph empty;
    CHECK(empty.count_by_label().nodes.empty());
    CHECK(empty.count_by_label().edges.empty());
}

TEST_CASE("property: handshake, edge recovery, induced counts, labelling") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        int n = 1 + static_cast<int>(rng() % 20);
        auto g = oracle::random_labelled_graph(rng, n, 0.3, {"A", "B", "C"});

        std::size_t adj_total = 0;
        for (NodeId v = 0; v < g.node_count(); ++v) adj_total += g.adjacency(v).size();
        CHECK(adj_total == 2 * g.edge_count());

        std::set<std::pair<NodeId, NodeId>> recovered;
        for (NodeId v = 0; v < g.node_count(); ++v)
            for (auto u : g.neighbors(v)) recovered.insert({std::min(u, v), std::max(u, v)});
        CHECK(recovered == edge_set(g));

        std::vector<NodeId> subset;
        for (NodeId v = 0; v < g.node_count(); ++v)
            if (rng() % 2) subset.push_back(v);
        std::set<NodeId> in(subset.begin(), subset.end());
        std::size_t brute = 0;
        for (const auto& e : g.edges()) brute += in.count(e.u) && in.count(e.v);
        CHECK(g.induced_subgraph(subset).edge_count() == brute);

        auto counts = g.count_by_label();
        std::size_t total = 0;
        for (const auto& [label, c] : counts.nodes) total += c;
        CHECK(total == g.node_count());
        for (const auto& node : g.nodes()) CHECK(node.label < g.node_labels().size());
    }
}

TEST_CASE("graph files round-trip byte for byte") {
    HeteroGraph g;
    g.add_node("Clinical Trial", std::vector<double>{0.1, 1.0 / 3.0, -2e-300}, "NCT1");
    g.add_node("Adverse Event", std::vector<double>{0.5, 0.25}, "AE_x");
    g.add_node("Drug", std::nullopt, "aspirin");
    g.add_edge(0, 1, "Trial-Event", 0.0);
    g.add_edge(0, 1, "Trial-Event", 1.0);
    g.add_edge(0, 2, "Treatment");
    g.freeze();

    std::ostringstream nodes, edges;
    write_nodes_tsv(nodes, g);
    write_edges_tsv(edges, g);
    std::istringstream nin(nodes.str()), ein(edges.str());
    auto back = read_graph_tsv(nin, ein);
    CHECK(dump(back) == dump(g));
    CHECK(back.frozen());
    CHECK((*back.node(0).attrs)[1] == 1.0 / 3.0);
    CHECK(back.edge(0).weight == 0.0);
    CHECK_FALSE(back.edge(2).weight.has_value());
}

TEST_CASE("graph reader errors") {
    std::istringstream bad_header("x\ty\n"), edges("src\tdst\tlabel\tweight\n");
    CHECK_THROWS_AS(read_graph_tsv(bad_header, edges), SchemaError);

    std::ostringstream nodes;
    HeteroGraph g;
    g.add_node("A");
    write_nodes_tsv(nodes, g);
    std::istringstream nin(nodes.str()), bad_edge("src\tdst\tlabel\tweight\n0\t7\te\t\n");
    CHECK_THROWS_AS(read_graph_tsv(nin, bad_edge), RowError);
}
