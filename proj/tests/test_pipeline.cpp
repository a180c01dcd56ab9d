#include "hetlink/errors.hpp"
#include "hetlink/pipeline.hpp"
#include "hetlink/text.hpp"

#include <doctest.h>

#include <algorithm>
#include <set>
#include <sstream>

using namespace hetlink;

namespace {

/// 20 trials x 20 AEs with exactly 100 Expresses edges.
HeteroGraph hundred_edges() {
    HeteroGraph g;
    for (int i = 0; i < 20; ++i) g.add_node("Clinical Trial", std::nullopt, "t" + std::to_string(i));
    for (int j = 0; j < 20; ++j) g.add_node("Adverse Event", std::nullopt, "a" + std::to_string(j));
    int added = 0;
    for (int i = 0; i < 20 && added < 100; ++i)
        for (int j = i % 4; j < 20 && added < 100; j += 4, ++added) g.add_edge(NodeId(i), NodeId(20 + j), "Expresses");
    g.add_edge(0, 1, "Other");
    g.freeze();
    return g;
}

PipelineConfig small_config() {
    auto pc = PipelineConfig::desk_scale();
    pc.data.n_trials = 150;
    pc.walk.walk_length = 20;
    pc.skipgram.dim = 16;
    pc.skipgram.epochs = 1;
    pc.sage.layer_dims = {16, 16};
    pc.sage.fanouts = {5, 3};
    pc.sage.epochs = 1;
    pc.kernel_reference_size = 20;
    pc.kernel.iterations = 2;
    pc.kernel_aes = {};
    return pc;
}

std::string report_text(const RunReport& r) {
    std::ostringstream out;
    write_run_report_tsv(out, {r});
    return out.str();
}

} // namespace

TEST_CASE("split arithmetic on 100 edges") {
    auto g = hundred_edges();
    REQUIRE(g.count_by_label().edges.at("Expresses") == 100);
    auto s = split_edges(g, "Expresses", 0.10, 0.40, 7);
    CHECK(s.test_pos.size() == 10);
    CHECK(s.test_neg.size() == 10);
    CHECK(s.train_pos.size() == 40);
    CHECK(s.train_neg.size() == 40);
    CHECK(s.residual_graph.edge_count() == g.edge_count() - 50);
    CHECK(s.residual_graph.node_count() == g.node_count());
}

TEST_CASE("property: splits are disjoint, oriented and deterministic") {
    auto g = hundred_edges();
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        auto s = split_edges(g, "Expresses", 0.10, 0.40, seed);
        std::set<NodePair> seen;
        for (const auto* list : {&s.test_pos, &s.test_neg, &s.train_pos, &s.train_neg}) {
            for (const auto& p : *list) {
                CHECK(seen.insert(p).second);
                CHECK(g.label_name(p.first) == "Clinical Trial");
                CHECK(g.label_name(p.second) == "Adverse Event");
            }
        }
        for (const auto* list : {&s.test_neg, &s.train_neg})
            for (const auto& [u, v] : *list) CHECK_FALSE(g.has_edge(u, v));
        for (const auto* list : {&s.test_pos, &s.train_pos})
            for (const auto& [u, v] : *list) {
                CHECK(g.has_edge(u, v));
                CHECK_FALSE(s.residual_graph.has_edge(u, v));
            }
        auto again = split_edges(g, "Expresses", 0.10, 0.40, seed);
        CHECK(again.test_pos == s.test_pos);
        CHECK(again.train_neg == s.train_neg);
    }
}

TEST_CASE("split errors") {
    auto g = hundred_edges();
    CHECK_THROWS_AS(split_edges(g, "Other", 0.1, 0.4, 1), DataError);
    CHECK_THROWS_AS(split_edges(g, "Missing", 0.1, 0.4, 1), DataError);
    CHECK_THROWS_AS(split_edges(g, "Expresses", 0.6, 0.6, 1), ConfigError);

    HeteroGraph dense; // 4 x 4 trial-AE pairs, all linked: no non-edges left for negatives
    for (int i = 0; i < 4; ++i) dense.add_node("Clinical Trial");
    for (int j = 0; j < 4; ++j) dense.add_node("Adverse Event");
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) dense.add_edge(NodeId(i), NodeId(4 + j), "Expresses");
    dense.freeze();
    CHECK_THROWS_AS(split_edges(dense, "Expresses", 0.1, 0.4, 1), DataError);
}

TEST_CASE("array features") {
    TrialRecord a{"NCT1", "1", {"lung cancer"}, {"lung neoplasms", "cough"}, {"aspirin"}, {{"AE_x", 0.5}, {"AE_y", 0.0}}};
    TrialRecord b{"NCT2", "2", {"heart failure"}, {}, {"aspirin", "heparin"}, {{"AE_x", 0.0}, {"AE_y", 0.2}}};
    TrialRecord c{"NCT3", "3", {"gout"}, {}, {"colchicine"}, {{"AE_x", 0.1}, {"AE_y", 0.0}}};
    std::vector<TrialRecord> records{a, b, c};
    std::vector<NamePair> pos{{"NCT1", "AE_x"}, {"NCT2", "AE_y"}};
    std::vector<NamePair> neg{{"NCT2", "AE_x"}};
    auto f = fit_array_features(records, pos, neg);
    CHECK(f.ae_block.at("AE_x") == std::vector<double>{0.5, 0.5});
    CHECK(f.ae_block.at("AE_y") == std::vector<double>{1.0, 0.2});

    std::vector<NamePair> test{{"NCT3", "AE_x"}, {"NCT3", "AE_z"}};
    auto d = one_hot_edge_features(records, f, test, {});
    REQUIRE(d.X.rows() == 2);
    const auto dim = d.X.cols();
    CHECK(dim == static_cast<Eigen::Index>(f.vocabulary.dim() + 2));
    CHECK(d.X(0, dim - 2) == 0.5);
    CHECK(d.X(1, dim - 2) == 0.0); // unseen AE gives a zero block
    CHECK(d.X(1, dim - 1) == 0.0);
    CHECK(d.X.leftCols(dim - 2).sum() == 0.0); // NCT3 terms are outside the training vocabulary
    CHECK(d.y == std::vector<int>{1, 1});

    auto row_a = f.row(a, "AE_x");
    CHECK(std::count(row_a.begin(), row_a.end() - 2, 1.0) >= 2);
    CHECK(row_a.size() == static_cast<std::size_t>(dim));
}

TEST_CASE("no pipeline trains on a test pair") {
    auto pc = small_config();
    auto records = generate_synthetic(pc.data);
    auto exp = prepare_experiment(records, pc, 1);
    const auto test_pos = exp.split.names(exp.split.test_pos);
    const auto test_neg = exp.split.names(exp.split.test_neg);

    std::vector<RunReport> runs{run_metapath_pipeline(exp, pc, 1), run_array_pipeline(exp, pc, 1),
                                run_hinsage_pipeline(exp, pc, 1)};
    for (const auto& r : runs) {
        CHECK_FALSE(r.footprint.pairs.empty());
        CHECK(r.test_pairs.size() == test_pos.size() + test_neg.size());
        for (const auto* list : {&test_pos, &test_neg})
            for (const auto& [t, ae] : *list) CHECK_FALSE(r.footprint.touches(t, ae));
    }
    auto ae = adverse_event_names(records).front();
    auto kernel = run_kernel_pipeline(exp, ae, pc, 1);
    CHECK(kernel.footprint.training_items.size() == static_cast<std::size_t>(pc.kernel_reference_size) + kernel.n_train);
    for (const auto& [trial, target] : kernel.test_pairs) CHECK(kernel.footprint.training_items.count(trial) == 0);
}

TEST_CASE("binodal split graph hides held-out pairs") {
    auto pc = small_config();
    auto exp = prepare_experiment(generate_synthetic(pc.data), pc, 2);
    auto features = fit_array_features(exp.records, exp.split.names(exp.split.train_pos), exp.split.names(exp.split.train_neg));
    auto g = split_binodal_graph(exp, features);
    std::map<NamePair, double> weight;
    for (EdgeIndex e = 0; e < g.edge_count(); ++e) {
        const auto& ed = g.edge(e);
        weight[{g.node(ed.u).name, g.node(ed.v).name}] = *ed.weight;
        weight[{g.node(ed.v).name, g.node(ed.u).name}] = *ed.weight;
    }
    for (const auto* list : {&exp.split.test_pos, &exp.split.train_pos})
        for (const auto& p : exp.split.names(*list)) CHECK(weight.at(p) == 0.0);
}

TEST_CASE("untrained hinsage head scores near chance") {
    auto pc = small_config();
    pc.data.n_trials = 300;
    pc.sage.epochs = 0;
    double total = 0;
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        auto exp = prepare_experiment(generate_synthetic(pc.data), pc, seed);
        total += run_hinsage_pipeline(exp, pc, seed).auc;
    }
    CHECK(total / 3.0 >= 0.4);
    CHECK(total / 3.0 <= 0.6);
}

TEST_CASE("pipelines are deterministic per seed") {
    auto pc = small_config();
    auto records = generate_synthetic(pc.data);
    auto a = prepare_experiment(records, pc, 3);
    auto b = prepare_experiment(records, pc, 3);
    CHECK(report_text(run_metapath_pipeline(a, pc, 3)) == report_text(run_metapath_pipeline(b, pc, 3)));
    CHECK(report_text(run_array_pipeline(a, pc, 3)) == report_text(run_array_pipeline(b, pc, 3)));
    CHECK(report_text(run_hinsage_pipeline(a, pc, 3)) == report_text(run_hinsage_pipeline(b, pc, 3)));
}

TEST_CASE("kernel reference set must fit") {
    auto pc = small_config();
    pc.kernel_reference_size = 149;
    auto exp = prepare_experiment(generate_synthetic(pc.data), pc, 1);
    CHECK_THROWS_AS(run_kernel_pipeline(exp, adverse_event_names(exp.records).front(), pc, 1), DataError);
    CHECK_THROWS_AS(run_kernel_pipeline(exp, "AE_missing", pc, 1), DataError);
}

TEST_CASE("compare report arithmetic") {
    auto run = [](std::string method, double auc, std::uint64_t seed) {
        RunReport r;
        r.method = std::move(method);
        r.classifier = "logreg";
        r.auc = auc;
        r.seed = seed;
        return r;
    };
    auto rows = compare_report({run("metapath", 0.857, 1), run("metapath", 0.857, 2), run("metapath", 0.848, 3),
                                run("flat", 0.8, 1), run("flat", 0.8, 2), run("flat", 0.8, 3), run("solo", 0.61, 1)});
    REQUIRE(rows.size() == 3);
    CHECK(format_fixed(rows[0].mean, 3) == "0.854");
    CHECK(format_fixed(*rows[0].sd, 3) == "0.005");
    CHECK(rows[1].mean == doctest::Approx(0.8));
    CHECK(*rows[1].sd == doctest::Approx(0.0));
    CHECK_FALSE(rows[2].sd.has_value());

    std::ostringstream out;
    write_compare_tsv(out, rows);
    CHECK(out.str() == "method\tclassifier\trun_1\trun_2\trun_3\tmean\tsd\n"
                       "metapath\tlogreg\t0.857\t0.857\t0.848\t0.854\t0.005\n"
                       "flat\tlogreg\t0.800\t0.800\t0.800\t0.800\t0.000\n"
                       "solo\tlogreg\t0.610\t\t\t0.610\t\n");
}

TEST_CASE("run report round trip") {
    RunReport r;
    r.method = "kernel[AE_x]";
    r.classifier = "svm";
    r.seed = 12;
    r.auc = 0.6180339887498949;
    std::ostringstream out;
    write_run_report_tsv(out, {r, r});
    std::istringstream in(out.str());
    auto back = read_run_report_tsv(in);
    REQUIRE(back.size() == 2);
    CHECK(back[0].method == r.method);
    CHECK(back[0].seed == 12);
    CHECK(back[0].auc == r.auc);
    std::istringstream bad("method\tclassifier\tseed\tauc\nm\tc\t1\t1.5\n");
    CHECK_THROWS_AS(read_run_report_tsv(bad), RowError);
    std::istringstream wrong("id\tvalue\n");
    CHECK_THROWS_AS(read_run_report_tsv(wrong), SchemaError);
}

TEST_CASE("pipeline config round trip and errors") {
    auto pc = PipelineConfig::desk_scale();
    pc.seeds = {4, 5};
    pc.kernel.kind = KernelKind::vertex_label_histogram;
    auto cfg = pc.to_config();
    auto back = PipelineConfig::from_config(cfg);
    CHECK(back.to_config().to_string() == cfg.to_string());
    CHECK(back.seeds == std::vector<std::uint64_t>{4, 5});

    Config unknown;
    unknown.set("walk.nonsense", "1");
    CHECK_THROWS_AS(PipelineConfig::from_config(unknown), ConfigError);
    Config bad_value;
    bad_value.set("test_frac", "lots");
    CHECK_THROWS_AS(PipelineConfig::from_config(bad_value), ConfigError);
}
