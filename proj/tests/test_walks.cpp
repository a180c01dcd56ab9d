#include "hetlink/errors.hpp"
#include "hetlink/ingest.hpp"
#include "hetlink/synthetic.hpp"
#include "hetlink/walks.hpp"

#include "golden.hpp"
#include "oracles.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <doctest.h>

#include <sstream>

using namespace hetlink;

namespace {

LabelId lid(const HeteroGraph& g, const std::string& name) { return *g.node_labels().find(name); }

HeteroGraph triangle() {
    HeteroGraph g;
    for (int i = 0; i < 3; ++i) g.add_node("N");
    g.add_edge(0, 1, "e");
    g.add_edge(1, 2, "e");
    g.add_edge(0, 2, "e");
    g.freeze();
    return g;
}

HeteroGraph complete_bipartite(int trials, int events) {
    HeteroGraph g;
    for (int i = 0; i < trials; ++i) g.add_node("Clinical Trial");
    for (int j = 0; j < events; ++j) g.add_node("Adverse Event");
    for (int i = 0; i < trials; ++i)
        for (int j = 0; j < events; ++j) g.add_edge(NodeId(i), NodeId(trials + j), "Expresses");
    g.freeze();
    return g;
}

/// Walk conformance: consecutive nodes adjacent, labels follow the cycled metapath.
bool conforms(const HeteroGraph& g, const std::vector<NodeId>& walk, const std::vector<LabelId>& path) {
    if (walk.empty() || g.node(walk[0]).label != path[0]) return false;
    for (std::size_t i = 1; i < walk.size(); ++i) {
        if (!g.has_edge(walk[i - 1], walk[i])) return false;
        if (g.node(walk[i]).label != path[((i - 1) % (path.size() - 1)) + 1]) return false;
    }
    return true;
}

} // namespace

TEST_CASE("uniform step when p = q = 1") {
    auto g = triangle();
    WalkConfig c;
    auto d = next_step_distribution(g, 0, 1, lid(g, "N"), c);
    REQUIRE(d.candidates == std::vector<NodeId>{0, 2});
    CHECK(d.probs[0] == doctest::Approx(0.5));
    CHECK(d.probs[1] == doctest::Approx(0.5));
}

TEST_CASE("triangle with p = 2 gives 1/3 and 2/3") {
    auto g = triangle();
    WalkConfig c;
    c.p = 2.0;
    c.q = 1.0;
    auto d = next_step_distribution(g, 0, 1, lid(g, "N"), c); // prev a=0, curr b=1, candidates {a, c}
    REQUIRE(d.candidates == std::vector<NodeId>{0, 2});
    CHECK(d.probs[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
    CHECK(d.probs[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("in-out parameter weights distant candidates") {
    HeteroGraph g; // path 0-1-2 plus 1-3 and 0-3
    for (int i = 0; i < 4; ++i) g.add_node("N");
    g.add_edge(0, 1, "e");
    g.add_edge(1, 2, "e");
    g.add_edge(1, 3, "e");
    g.add_edge(0, 3, "e");
    g.freeze();
    WalkConfig c;
    c.p = 1.0;
    c.q = 4.0;
    auto d = next_step_distribution(g, 0, 1, lid(g, "N"), c); // weights 1 (return), 1/4 (node 2), 1 (node 3)
    REQUIRE(d.candidates == std::vector<NodeId>{0, 2, 3});
    CHECK(d.probs[0] == doctest::Approx(1.0 / 2.25));
    CHECK(d.probs[1] == doctest::Approx(0.25 / 2.25));
    CHECK(d.probs[2] == doctest::Approx(1.0 / 2.25));
}

TEST_CASE("isolated node gives empty distribution") {
    HeteroGraph g;
    g.add_node("N");
    g.freeze();
    CHECK(next_step_distribution(g, std::nullopt, 0, 0, WalkConfig{}).empty());
}

TEST_CASE("parallel edges do not add weight") {
    HeteroGraph g;
    for (int i = 0; i < 3; ++i) g.add_node("N");
    g.add_edge(0, 1, "a");
    g.add_edge(0, 1, "b");
    g.add_edge(0, 2, "a");
    g.freeze();
    auto d = next_step_distribution(g, std::nullopt, 0, 0, WalkConfig{});
    CHECK(d.candidates == std::vector<NodeId>{1, 2});
    CHECK(d.probs[0] == doctest::Approx(0.5));
}

TEST_CASE("metapath cycling and termination") {
    auto g = complete_bipartite(3, 2);
    std::vector<LabelId> path{lid(g, "Clinical Trial"), lid(g, "Adverse Event"), lid(g, "Clinical Trial")};
    WalkConfig c;
    c.walk_length = 5;
    auto rng = make_rng(1);
    auto walk = metapath_walk(g, 0, path, c, rng);
    REQUIRE(walk.size() == 5);
    std::vector<std::string> seen;
    for (auto v : walk) seen.push_back(g.label_name(v));
    CHECK(seen == std::vector<std::string>{"Clinical Trial", "Adverse Event", "Clinical Trial", "Adverse Event",
                                           "Clinical Trial"});

    HeteroGraph lonely;
    lonely.add_node("Clinical Trial");
    lonely.add_node("Adverse Event");
    lonely.freeze();
    auto r2 = make_rng(1);
    std::vector<LabelId> p2{0, 1, 0};
    CHECK(metapath_walk(lonely, 0, p2, c, r2) == std::vector<NodeId>{0});
    CHECK_THROWS_AS(metapath_walk(lonely, 1, p2, c, r2), std::invalid_argument);
}

TEST_CASE("same seed gives the same walk") {
    auto g = complete_bipartite(4, 6);
    std::vector<LabelId> path{0, 1, 0};
    WalkConfig c;
    c.walk_length = 30;
    auto a = make_rng(9), b = make_rng(9);
    CHECK(metapath_walk(g, 2, path, c, a) == metapath_walk(g, 2, path, c, b));
}

TEST_CASE("metapath files and aliases") {
    std::istringstream in("# comment\nClinical Trial,Side Effect,Clinical Trial\n\nDrug, Clinical Trial ,Drug\n");
    auto paths = parse_metapaths(in);
    REQUIRE(paths.size() == 2);
    CHECK(paths[1].labels == std::vector<std::string>{"Drug", "Clinical Trial", "Drug"});
    std::ostringstream out;
    write_metapaths(out, paths);
    std::istringstream again(out.str());
    CHECK(parse_metapaths(again) == paths);
    std::istringstream bad("Drug\n");
    CHECK_THROWS_AS(parse_metapaths(bad), RowError);

    CHECK(default_metapaths().size() == 16);
    auto g = complete_bipartite(2, 2);
    std::string problem;
    CHECK(resolve_metapath(g, paths[0], default_label_aliases(), &problem).has_value());
    CHECK_FALSE(resolve_metapath(g, paths[1], default_label_aliases(), &problem).has_value());
    CHECK_FALSE(problem.empty());
}

TEST_CASE("corpus counting, skipping and thread independence") {
    auto g = complete_bipartite(10, 4);
    WalkConfig c;
    c.walk_length = 7;
    c.walks_per_node = 2;
    c.seed = 3;
    std::vector<MetaPathSpec> paths{{{"Clinical Trial", "Adverse Event", "Clinical Trial"}},
                                    {{"Drug", "Clinical Trial", "Drug"}}};
    auto corpus = generate_corpus(g, paths, c);
    CHECK(corpus.walks.size() <= 20);
    CHECK(corpus.walks.size() == 20);
    CHECK(corpus.warnings.size() == 1);
    c.threads = 4;
    auto parallel = generate_corpus(g, paths, c);
    CHECK(parallel.walks == corpus.walks);
    CHECK(corpus_hash(parallel) == corpus_hash(corpus));

    std::ostringstream out;
    write_corpus(out, corpus);
    auto text = out.str();
    CHECK(std::count(text.begin(), text.end(), '\n') == 20);
}

TEST_CASE("property: walks conform on random graphs") {
    std::mt19937_64 rng(21);
    std::vector<std::vector<std::string>> shapes{{"A", "B", "A"}, {"A", "B", "C", "B", "A"}, {"B", "C", "B"},
                                                 {"C", "A", "C"}};
    std::size_t walks = 0;
    for (int trial = 0; trial < 40; ++trial) {
        auto g = oracle::random_labelled_graph(rng, 6 + static_cast<int>(rng() % 20), 0.3, {"A", "B", "C"});
        WalkConfig c;
        c.walk_length = 2 + static_cast<int>(rng() % 15);
        c.p = 0.25 + static_cast<double>(rng() % 8) * 0.5;
        c.q = 0.25 + static_cast<double>(rng() % 8) * 0.5;
        c.seed = rng();
        std::vector<MetaPathSpec> paths;
        for (const auto& s : shapes) paths.push_back({s});
        auto corpus = generate_corpus(g, paths, c, {});
        for (std::size_t w = 0; w < corpus.walks.size(); ++w) {
            auto path = *resolve_metapath(g, paths[corpus.metapath_of_walk[w]], {});
            CHECK(conforms(g, corpus.walks[w], path));
            CHECK(corpus.walks[w].size() <= static_cast<std::size_t>(c.walk_length));
            ++walks;
        }
    }
    CHECK(walks > 200);
}

TEST_CASE("p = q = 1 steps on a complete bipartite graph are uniform") {
    const int events = 8;
    auto g = complete_bipartite(5, events);
    std::vector<LabelId> path{0, 1, 0};
    WalkConfig c;
    c.walk_length = 3; // CT, AE, CT: the AE step has no prev, the CT step does
    std::vector<double> ae_counts(events, 0.0), ct_counts(5, 0.0);
    auto rng = make_rng(4321);
    for (int i = 0; i < 10000; ++i) {
        auto walk = metapath_walk(g, 0, path, c, rng);
        REQUIRE(walk.size() == 3);
        ae_counts[walk[1] - 5] += 1;
        ct_counts[walk[2]] += 1;
    }
    for (const auto* counts : {&ae_counts, &ct_counts}) {
        double expected = 10000.0 / static_cast<double>(counts->size());
        double stat = 0.0;
        for (double o : *counts) stat += (o - expected) * (o - expected) / expected;
        boost::math::chi_squared dist(static_cast<double>(counts->size() - 1));
        double p_value = boost::math::cdf(boost::math::complement(dist, stat));
        CHECK(p_value > 0.01);
    }
}

TEST_CASE("golden: corpus hash on the seed-1 synthetic knowledge graph") {
    SyntheticConfig data;
    data.seed = 1;
    auto recs = generate_synthetic(data);
    auto kg = build_knowledge_graph(recs, condition_split(recs), drug_split(recs));
    WalkConfig c;
    c.walk_length = 40;
    c.seed = 1;
    auto corpus = generate_corpus(kg, default_metapaths(), c);
    CHECK(corpus.warnings.size() == 3);
    for (std::size_t w = 0; w < corpus.walks.size(); ++w) {
        auto path = *resolve_metapath(kg, default_metapaths()[corpus.metapath_of_walk[w]], default_label_aliases());
        REQUIRE(conforms(kg, corpus.walks[w], path));
    }
    auto actual = std::to_string(corpus_hash(corpus)) + "\n";
    CHECK(actual == golden::expect("corpus_hash_seed1.txt", actual));
    CHECK(corpus_hash(generate_corpus(kg, default_metapaths(), c)) == corpus_hash(corpus));
}
