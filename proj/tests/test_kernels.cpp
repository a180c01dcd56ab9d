#include "hetlink/errors.hpp"
#include "hetlink/ingest.hpp"
#include "hetlink/kernels.hpp"
#include "hetlink/synthetic.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

using namespace hetlink;

namespace {

HeteroGraph labelled(const std::vector<std::string>& labels, const std::vector<std::pair<int, int>>& edges = {}) {
    HeteroGraph g;
    for (const auto& l : labels) g.add_node(l);
    for (auto [u, v] : edges) g.add_edge(NodeId(u), NodeId(v), "e");
    g.freeze();
    return g;
}

std::vector<HeteroGraph> constituent_sample(std::size_t count, std::uint64_t seed) {
    SyntheticConfig c;
    c.seed = seed;
    c.n_trials = 120;
    auto recs = generate_synthetic(c);
    auto kg = build_knowledge_graph(recs, condition_split(recs), drug_split(recs));
    auto all = build_constituent_graphs(kg, recs);
    std::mt19937_64 rng(seed);
    std::shuffle(all.begin(), all.end(), rng);
    std::vector<HeteroGraph> out;
    for (std::size_t i = 0; i < count; ++i) out.push_back(all[i].second);
    return out;
}

std::vector<NodeId> random_perm(std::size_t n, std::mt19937_64& rng) {
    std::vector<NodeId> p(n);
    std::iota(p.begin(), p.end(), NodeId{0});
    std::shuffle(p.begin(), p.end(), rng);
    return p;
}

double kernel_value(KernelKind kind, const HeteroGraph& g, const HeteroGraph& h) {
    KernelConfig c;
    c.kind = kind;
    switch (kind) {
    case KernelKind::node_pairs_rbf: return node_pairs_kernel(g, h, c.rbf_sigma);
    case KernelKind::vertex_label_histogram: return vertex_label_histogram_kernel(g, h);
    case KernelKind::propagation: return propagation_kernel(g, h, c);
    }
    return 0.0;
}

} // namespace

TEST_CASE("rbf examples") {
    std::vector<double> x{1.0, 2.0}, y{1.0, 2.0};
    CHECK(rbf(x, y, 0.7) == 1.0);
    const double sigma = 1.3;
    std::vector<double> z{1.0 + sigma * std::sqrt(2.0), 2.0}; // |x - z|^2 = 2 sigma^2
    CHECK(rbf(x, z, sigma) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK(std::exp(-1.0) == doctest::Approx(0.367879).epsilon(1e-6));
    CHECK(rbf(x, z, sigma) == rbf(z, x, sigma));
    std::vector<double> shorter{1.0};
    CHECK_THROWS_AS(rbf(x, shorter, 1.0), DimensionMismatch);
}

TEST_CASE("node pairs kernel") {
    HeteroGraph one, other, two, three;
    one.add_node("A", std::vector<double>{0.5});
    other.add_node("B", std::vector<double>{0.5});
    for (int i = 0; i < 2; ++i) two.add_node("A", std::vector<double>{1.0});
    for (int i = 0; i < 3; ++i) three.add_node("A", std::vector<double>{1.0});
    CHECK(node_pairs_kernel(one, other, 1.0) == 1.0);
    CHECK(node_pairs_kernel(two, three, 1.0) == 6.0);

    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 30; ++trial) {
        auto g = oracle::random_attributed_graph(rng, 4, 0.5, 3, 3);
        auto h = oracle::random_attributed_graph(rng, 4, 0.5, 3, 3);
        CHECK(std::abs(node_pairs_kernel(g, h, 0.8) - oracle::node_pairs_double_loop(g, h, 0.8)) <= 1e-12);
    }
    auto bare = labelled({"A"});
    CHECK_THROWS_AS(node_pairs_kernel(one, bare, 1.0), DataError);
}

TEST_CASE("vertex label histogram kernel") {
    auto g = labelled({"A", "A", "B"});
    auto h = labelled({"A", "B", "B"});
    CHECK(vertex_label_histogram_kernel(g, h) == 4.0);
    CHECK(vertex_label_histogram_kernel(g, labelled({"C", "D"})) == 0.0);
    CHECK(vertex_label_histogram_kernel(g, g) == 5.0);
    CHECK(vertex_label_histogram_kernel(g, g) >= static_cast<double>(g.node_count()));
}

TEST_CASE("propagation kernel on edgeless graphs counts labels per iteration") {
    auto g = labelled({"A", "A", "B", "C"});
    auto h = labelled({"A", "B", "B"});
    KernelConfig c;
    c.iterations = 1;
    CHECK(propagation_kernel(g, h, c) == 2.0 * vertex_label_histogram_kernel(g, h));
    c.iterations = 3;
    CHECK(propagation_kernel(g, h, c) == 4.0 * vertex_label_histogram_kernel(g, h));
}

TEST_CASE("isomorphic graphs have equal self kernels") {
    auto g = labelled({"A", "B", "A", "C"}, {{0, 1}, {1, 2}, {2, 3}, {0, 2}});
    auto h = oracle::permute_nodes(g, {2, 0, 3, 1});
    KernelConfig c;
    CHECK(std::abs(propagation_kernel(g, g, c) - propagation_kernel(h, h, c)) <= 1e-12);
    CHECK(propagation_kernel(g, h, c) == propagation_kernel(g, g, c));
}

TEST_CASE("property: symmetry and permutation invariance") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 40; ++trial) {
        auto g = oracle::random_attributed_graph(rng, 2 + static_cast<int>(rng() % 8), 0.4, 2, 2);
        auto h = oracle::random_attributed_graph(rng, 2 + static_cast<int>(rng() % 8), 0.4, 2, 2);
        auto gp = oracle::permute_nodes(g, random_perm(g.node_count(), rng));
        for (auto kind : {KernelKind::node_pairs_rbf, KernelKind::vertex_label_histogram, KernelKind::propagation}) {
            double k = kernel_value(kind, g, h);
            CHECK(std::abs(k - kernel_value(kind, h, g)) <= 1e-12 * std::max(1.0, std::abs(k)));
            CHECK(std::abs(k - kernel_value(kind, gp, h)) <= 1e-12 * std::max(1.0, std::abs(k)));
        }
    }
}

TEST_CASE("normalized Gram matrices over constituent graphs are valid kernels") {
    auto graphs = constituent_sample(30, 4);
    auto attributed = graphs;
    auto alphabet = label_union(graphs);
    for (auto& g : attributed) g = with_label_attributes(g, alphabet);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < graphs.size(); ++i) ids.push_back("g" + std::to_string(i));

    for (auto kind : {KernelKind::node_pairs_rbf, KernelKind::vertex_label_histogram, KernelKind::propagation}) {
        KernelConfig c;
        c.kind = kind;
        auto gram = gram_matrix(attributed, ids, c);
        const auto& m = gram.values;
        CHECK(gram.normalized);
        std::vector<std::vector<double>> rows(30, std::vector<double>(30));
        for (int i = 0; i < 30; ++i) {
            CHECK(std::abs(m(i, i) - 1.0) <= 1e-10);
            for (int j = 0; j < 30; ++j) {
                CHECK(std::abs(m(i, j) - m(j, i)) <= 1e-10);
                CHECK(m(i, j) <= 1.0 + 1e-10);
                CHECK(m(i, j) >= -1.0);
                rows[i][j] = m(i, j);
            }
        }
        auto eig = oracle::jacobi_eigenvalues(rows);
        CHECK(eig.front() >= -1e-8 * m.trace());
        auto check = psd_check(m);
        CHECK(check.psd);
        CHECK(check.min_eigenvalue == doctest::Approx(eig.front()).epsilon(1e-9).scale(1.0));
    }
}

TEST_CASE("rectangular Gram agrees with the square one") {
    auto graphs = constituent_sample(8, 5);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < graphs.size(); ++i) ids.push_back("g" + std::to_string(i));
    KernelConfig c;
    auto square = gram_matrix(graphs, ids, c);
    std::span<const HeteroGraph> all(graphs);
    std::span<const std::string> all_ids(ids);
    auto rect = gram_matrix(all.subspan(0, 3), all_ids.subspan(0, 3), all.subspan(3), all_ids.subspan(3), c);
    REQUIRE(rect.values.rows() == 3);
    REQUIRE(rect.values.cols() == 5);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 5; ++j) CHECK(std::abs(rect.values(i, j) - square.values(i, 3 + j)) <= 1e-12);

    c.threads = 3;
    auto threaded = gram_matrix(graphs, ids, c);
    CHECK(threaded.values == square.values);

    std::ostringstream out;
    write_gram_tsv(out, rect);
    auto text = out.str();
    CHECK(text.rfind("id\tg3\tg4\tg5\tg6\tg7\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);
}

TEST_CASE("kernel errors name the failing pair") {
    std::vector<HeteroGraph> graphs{labelled({"A"}), labelled({"B"})};
    std::vector<std::string> ids{"first", "second"};
    KernelConfig c;
    c.kind = KernelKind::node_pairs_rbf;
    CHECK_THROWS_WITH_AS(gram_matrix(graphs, ids, c), doctest::Contains("first"), DataError);
    c.iterations = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    CHECK_THROWS_AS(parse_kernel_kind("pyramid"), ConfigError);
}

TEST_CASE("psd check examples") {
    Eigen::Matrix2d a;
    a << 2, 1, 1, 2;
    auto ra = psd_check(a);
    CHECK(ra.psd);
    CHECK(ra.min_eigenvalue == doctest::Approx(1.0));
    Eigen::Matrix2d b;
    b << 1, 2, 2, 1;
    auto rb = psd_check(b);
    CHECK_FALSE(rb.psd);
    CHECK(rb.min_eigenvalue == doctest::Approx(-1.0));
    auto ri = psd_check(Eigen::MatrixXd::Identity(4, 4));
    CHECK(ri.psd);
    CHECK(ri.min_eigenvalue == doctest::Approx(1.0));
    Eigen::Matrix2d asym;
    asym << 1, 0.5, 0, 1;
    CHECK_THROWS_AS(psd_check(asym), std::invalid_argument);
}

TEST_CASE("label attributes") {
    auto g = labelled({"B", "A", "Z"}, {{0, 1}});
    auto a = with_label_attributes(g, {"A", "B"});
    CHECK(*a.node(0).attrs == std::vector<double>{0, 1});
    CHECK(*a.node(2).attrs == std::vector<double>{0, 0});
    CHECK(a.edge_count() == 1);
    std::vector<HeteroGraph> gs{g, labelled({"C"})};
    CHECK(label_union(gs) == std::vector<std::string>{"A", "B", "C", "Z"});
}
