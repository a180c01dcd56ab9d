#include "hetlink/pipeline.hpp"

#include "hetlink/errors.hpp"
#include "hetlink/rng.hpp"
#include "hetlink/text.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_map>
#include <unordered_set>

namespace hetlink {
namespace {

// Component stream keys under a run seed.
enum : std::uint64_t { kWalkStream = 1, kSkipGramStream, kClassifierStream, kSageStream, kKernelStream, kShuffleStream };

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string flat_config(const Config& cfg) {
    std::vector<std::string> parts;
    for (const auto& [k, v] : cfg.values()) parts.push_back(k + "=" + v);
    return join(parts, ";");
}

void check_unused(const Config& section, const std::string& prefix) {
    auto unused = section.unused_keys();
    if (!unused.empty()) throw ConfigError("unknown config key '" + prefix + "." + unused.front() + "'");
}

ClassifierSpec classifier_from(const Config& section, const std::string& fallback_kind) {
    ClassifierSpec spec;
    spec.kind = fallback_kind;
    for (const auto& [k, v] : section.values()) {
        if (k == "kind") {
            spec.kind = v;
        } else if (k == "grid_search") {
            spec.grid_search = section.get_bool("grid_search", false);
        } else {
            spec.params.set(k, v);
        }
    }
    make_classifier(spec, 0); // validates kind and parameter values
    return spec;
}

void put_section(Config& out, const std::string& prefix, const Config& section) {
    for (const auto& [k, v] : section.values()) out.set(prefix + "." + k, v);
}

std::unordered_map<std::string, const TrialRecord*> records_by_id(const std::vector<TrialRecord>& records) {
    std::unordered_map<std::string, const TrialRecord*> out;
    for (const auto& r : records) out.emplace(r.nct_id, &r);
    return out;
}

const TrialRecord& lookup(const std::unordered_map<std::string, const TrialRecord*>& index, const std::string& id) {
    auto it = index.find(id);
    if (it == index.end()) throw DataError("no record for trial '" + id + "'");
    return *it->second;
}

void shuffle_labels(std::vector<int>& y, std::uint64_t seed) {
    auto rng = make_rng(seed, {kShuffleStream});
    std::shuffle(y.begin(), y.end(), rng);
}

void finish_report(RunReport& report, std::vector<double> scores, const std::vector<int>& labels) {
    report.roc = roc_auc(scores, labels);
    report.auc = report.roc.auc;
    report.test_scores = std::move(scores);
    report.test_labels = labels;
}

std::vector<int> pos_neg_labels(std::size_t pos, std::size_t neg) {
    std::vector<int> y(pos, 1);
    y.resize(pos + neg, 0);
    return y;
}

std::vector<NamePair> concat(const std::vector<NamePair>& a, const std::vector<NamePair>& b) {
    auto out = a;
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

WalkConfig walk_from(const Config& s, WalkConfig w) {
    w.walk_length = static_cast<int>(s.get_int("walk_length", w.walk_length));
    w.walks_per_node = static_cast<int>(s.get_int("walks_per_node", w.walks_per_node));
    w.p = s.get_double("p", w.p);
    w.q = s.get_double("q", w.q);
    w.seed = static_cast<std::uint64_t>(s.get_int("seed", static_cast<long long>(w.seed)));
    w.threads = static_cast<int>(s.get_int("threads", w.threads));
    w.validate();
    return w;
}

Config walk_to(const WalkConfig& w) {
    Config c;
    c.set("walk_length", std::to_string(w.walk_length));
    c.set("walks_per_node", std::to_string(w.walks_per_node));
    c.set("p", format_double(w.p));
    c.set("q", format_double(w.q));
    c.set("seed", std::to_string(w.seed));
    c.set("threads", std::to_string(w.threads));
    return c;
}

std::vector<std::string> parse_list(const std::string& text) {
    std::vector<std::string> out;
    for (const auto& p : split(text, ',')) {
        auto t = std::string(trim(p));
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

} // namespace

std::vector<NamePair> EdgeSplit::names(const std::vector<NodePair>& pairs) const {
    std::vector<NamePair> out;
    out.reserve(pairs.size());
    for (const auto& [u, v] : pairs) out.emplace_back(residual_graph.node(u).name, residual_graph.node(v).name);
    return out;
}

EdgeSplit split_edges(const HeteroGraph& graph, std::string_view edge_label, double test_frac, double train_frac,
                      std::uint64_t seed) {
    if (!(test_frac >= 0 && train_frac >= 0 && test_frac + train_frac <= 1.0)) {
        throw ConfigError("split fractions must be non-negative and sum to at most 1");
    }
    auto lid = graph.edge_labels().find(edge_label);
    if (!lid) throw DataError("graph has no '" + std::string(edge_label) + "' edges");
    std::vector<EdgeIndex> edges;
    for (EdgeIndex e = 0; e < graph.edge_count(); ++e)
        if (graph.edge(e).label == *lid) edges.push_back(e);
    if (edges.size() < 10) {
        throw DataError("need at least 10 '" + std::string(edge_label) + "' edges to split, found " +
                        std::to_string(edges.size()));
    }

    const auto& first = graph.edge(edges.front());
    const LabelId lu = graph.node(first.u).label;
    const LabelId lv = graph.node(first.v).label;
    auto oriented = [&](EdgeIndex e) -> NodePair {
        const auto& ed = graph.edge(e);
        return graph.node(ed.u).label == lu ? NodePair{ed.u, ed.v} : NodePair{ed.v, ed.u};
    };

    auto rng = make_rng(seed, {0x5b1});
    for (std::size_t i = edges.size() - 1; i > 0; --i) std::swap(edges[i], edges[uniform_index(rng, i + 1)]);

    const auto m = static_cast<double>(edges.size());
    const auto n_test = static_cast<std::size_t>(std::llround(m * test_frac));
    const auto n_train = static_cast<std::size_t>(std::llround(m * train_frac));

    EdgeSplit split;
    split.edge_label = std::string(edge_label);
    std::vector<bool> keep(graph.edge_count(), true);
    for (std::size_t i = 0; i < n_test + n_train; ++i) {
        keep[edges[i]] = false;
        (i < n_test ? split.test_pos : split.train_pos).push_back(oriented(edges[i]));
    }

    const auto us = graph.nodes_with_label(lu);
    const auto vs = graph.nodes_with_label(lv);
    std::set<NodePair> linked;
    for (auto u : us)
        for (const auto& adj : graph.adjacency(u))
            if (graph.node(adj.node).label == lv) linked.insert({u, adj.node});
    const std::size_t available = us.size() * vs.size() - linked.size();
    if (available < n_test + n_train) {
        throw DataError("only " + std::to_string(available) + " non-edges available for " +
                        std::to_string(n_test + n_train) + " negatives");
    }
    std::set<NodePair> chosen;
    auto draw = [&](std::vector<NodePair>& out, std::size_t count) {
        while (out.size() < count) {
            NodePair p{us[uniform_index(rng, us.size())], vs[uniform_index(rng, vs.size())]};
            if (p.first == p.second || linked.count(p) || chosen.count(p)) continue;
            chosen.insert(p);
            out.push_back(p);
        }
    };
    draw(split.test_neg, split.test_pos.size());
    draw(split.train_neg, split.train_pos.size());

    split.residual_graph = graph.filter_edges(keep);
    return split;
}

void TrainingFootprint::add_pair(const std::string& a, const std::string& b) {
    pairs.emplace(a, b);
    pairs.emplace(b, a);
}

bool TrainingFootprint::touches(const std::string& a, const std::string& b) const { return pairs.count({a, b}) != 0; }

PipelineConfig::PipelineConfig() {
    skipgram.dim = 512;
    walk.walk_length = 200;
}

Config config_section(const Config& cfg, const std::string& prefix) {
    Config out;
    const auto head = prefix + ".";
    for (const auto& [k, v] : cfg.values())
        if (k.rfind(head, 0) == 0) out.set(k.substr(head.size()), v);
    return out;
}

PipelineConfig PipelineConfig::from_config(const Config& cfg) {
    static const std::set<std::string> sections{"data", "walk", "skipgram", "metapath", "classifier",
                                                "sage", "kernel", "kernel_classifier"};
    static const std::set<std::string> top{"seeds", "test_frac", "train_frac", "shuffle_train_labels"};
    for (const auto& [k, v] : cfg.values()) {
        auto dot = k.find('.');
        if (dot == std::string::npos ? !top.count(k) : !sections.count(k.substr(0, dot))) {
            throw ConfigError("unknown config key '" + k + "'");
        }
    }

    PipelineConfig pc;
    if (cfg.has("seeds")) {
        pc.seeds.clear();
        for (const auto& s : parse_list(cfg.get_string("seeds", ""))) {
            long long v = 0;
            if (!parse_int(s, v) || v < 0) throw ConfigError("seeds must be non-negative integers");
            pc.seeds.push_back(static_cast<std::uint64_t>(v));
        }
        if (pc.seeds.empty()) throw ConfigError("seeds must not be empty");
    }
    pc.test_frac = cfg.get_double("test_frac", pc.test_frac);
    pc.train_frac = cfg.get_double("train_frac", pc.train_frac);
    if (!(pc.test_frac > 0 && pc.train_frac > 0 && pc.test_frac + pc.train_frac <= 1.0)) {
        throw ConfigError("test_frac and train_frac must be positive and sum to at most 1");
    }
    pc.shuffle_train_labels = cfg.get_bool("shuffle_train_labels", pc.shuffle_train_labels);

    auto data = config_section(cfg, "data");
    pc.data = SyntheticConfig::from_config(data);
    check_unused(data, "data");

    auto walk = config_section(cfg, "walk");
    pc.walk = walk_from(walk, pc.walk);
    if (walk.has("metapaths")) pc.metapaths = load_metapaths(walk.get_string("metapaths", ""));
    check_unused(walk, "walk");

    auto sg = config_section(cfg, "skipgram");
    Config sg_defaults = pc.skipgram.to_config();
    for (const auto& [k, v] : sg.values()) sg_defaults.set(k, v);
    pc.skipgram = SkipGramConfig::from_config(sg_defaults);
    for (const auto& k : sg_defaults.unused_keys())
        if (sg.has(k)) throw ConfigError("unknown config key 'skipgram." + k + "'");

    auto mp = config_section(cfg, "metapath");
    if (mp.has("edge_op")) pc.edge_op = parse_edge_op(mp.get_string("edge_op", ""));
    check_unused(mp, "metapath");

    pc.classifier = classifier_from(config_section(cfg, "classifier"), "logreg");
    pc.kernel_classifier = classifier_from(config_section(cfg, "kernel_classifier"), "svm");

    auto sage = config_section(cfg, "sage");
    pc.sage = SageConfig::from_config(sage);
    check_unused(sage, "sage");

    auto kernel = config_section(cfg, "kernel");
    pc.kernel = KernelConfig::from_config(kernel);
    pc.kernel_precomputed = kernel.get_bool("precomputed", pc.kernel_precomputed);
    pc.kernel_reference_size = static_cast<int>(kernel.get_int("reference_size", pc.kernel_reference_size));
    pc.kernel_train_frac = kernel.get_double("train_frac", pc.kernel_train_frac);
    if (kernel.has("aes")) pc.kernel_aes = parse_list(kernel.get_string("aes", ""));
    if (pc.kernel_reference_size <= 0) throw ConfigError("kernel.reference_size must be positive");
    if (!(pc.kernel_train_frac > 0 && pc.kernel_train_frac < 1)) throw ConfigError("kernel.train_frac must lie in (0,1)");
    check_unused(kernel, "kernel");
    return pc;
}

Config PipelineConfig::to_config() const {
    Config out;
    std::vector<std::string> s;
    for (auto v : seeds) s.push_back(std::to_string(v));
    out.set("seeds", join(s, ","));
    out.set("test_frac", format_double(test_frac));
    out.set("train_frac", format_double(train_frac));
    out.set("shuffle_train_labels", shuffle_train_labels ? "true" : "false");
    put_section(out, "data", data.to_config());
    put_section(out, "walk", walk_to(walk));
    put_section(out, "skipgram", skipgram.to_config());
    out.set("metapath.edge_op", std::string(edge_op_name(edge_op)));
    out.set("classifier.kind", classifier.kind);
    out.set("classifier.grid_search", classifier.grid_search ? "true" : "false");
    put_section(out, "classifier", classifier.params);
    put_section(out, "sage", sage.to_config());
    put_section(out, "kernel", kernel.to_config());
    out.set("kernel.precomputed", kernel_precomputed ? "true" : "false");
    out.set("kernel.reference_size", std::to_string(kernel_reference_size));
    out.set("kernel.train_frac", format_double(kernel_train_frac));
    if (!kernel_aes.empty()) out.set("kernel.aes", join(kernel_aes, ","));
    out.set("kernel_classifier.kind", kernel_classifier.kind);
    out.set("kernel_classifier.grid_search", kernel_classifier.grid_search ? "true" : "false");
    put_section(out, "kernel_classifier", kernel_classifier.params);
    return out;
}

PipelineConfig PipelineConfig::desk_scale() {
    PipelineConfig pc;
    pc.skipgram.dim = 64;
    pc.walk.walk_length = 40;
    return pc;
}

std::vector<double> ArrayFeatures::row(const TrialRecord& trial, const std::string& ae) const {
    auto out = vocabulary.encode(trial);
    auto it = ae_block.find(ae);
    if (it == ae_block.end()) {
        out.push_back(0.0);
        out.push_back(0.0);
    } else {
        out.insert(out.end(), it->second.begin(), it->second.end());
    }
    return out;
}

ArrayFeatures fit_array_features(const std::vector<TrialRecord>& records, const std::vector<NamePair>& train_pos,
                                 const std::vector<NamePair>& train_neg) {
    auto index = records_by_id(records);
    auto conditions = condition_split(records);
    auto drugs = drug_split(records);

    std::set<std::string> seen;
    std::vector<TrialRecord> training;
    for (const auto* list : {&train_pos, &train_neg})
        for (const auto& [trial, ae] : *list)
            if (seen.insert(trial).second) training.push_back(lookup(index, trial));

    ArrayFeatures f;
    f.vocabulary = TrialVocabulary::from_records(training, conditions, drugs);

    std::map<std::string, double> pos, total, frac_sum;
    for (const auto& [trial, ae] : train_pos) {
        pos[ae] += 1;
        total[ae] += 1;
        frac_sum[ae] += lookup(index, trial).adverse_events.at(ae);
    }
    for (const auto& [trial, ae] : train_neg) total[ae] += 1;
    for (const auto& [ae, n] : total) {
        double p = pos[ae];
        f.ae_block[ae] = {p / n, p > 0 ? frac_sum[ae] / p : 0.0};
    }
    return f;
}

Dataset one_hot_edge_features(const std::vector<TrialRecord>& records, const ArrayFeatures& features,
                              const std::vector<NamePair>& pos, const std::vector<NamePair>& neg) {
    auto index = records_by_id(records);
    auto all = concat(pos, neg);
    Dataset d;
    const auto dim = static_cast<Eigen::Index>(features.vocabulary.dim() + 2);
    d.X.resize(static_cast<Eigen::Index>(all.size()), dim);
    for (std::size_t i = 0; i < all.size(); ++i) {
        auto row = features.row(lookup(index, all[i].first), all[i].second);
        d.X.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::RowVectorXd>(row.data(), dim);
        d.ids.push_back(all[i].first + "|" + all[i].second);
    }
    d.y = pos_neg_labels(pos.size(), neg.size());
    return d;
}

Experiment prepare_experiment(std::vector<TrialRecord> records, const PipelineConfig& config, std::uint64_t seed) {
    Experiment exp;
    exp.records = std::move(records);
    exp.conditions = condition_split(exp.records);
    exp.drugs = drug_split(exp.records);
    exp.knowledge_graph = build_knowledge_graph(exp.records, exp.conditions, exp.drugs);
    exp.split = split_edges(exp.knowledge_graph, labels::kExpresses, config.test_frac, config.train_frac, seed);
    return exp;
}

RunReport run_metapath_pipeline(const Experiment& exp, const PipelineConfig& config, std::uint64_t seed) {
    const auto t0 = Clock::now();
    const auto& split = exp.split;
    const auto& g = split.residual_graph;
    RunReport report;
    report.method = "metapath";
    report.classifier = config.classifier.kind;
    report.seed = seed;

    WalkConfig wc = config.walk;
    wc.seed = derive_seed(seed, {kWalkStream, config.walk.seed});
    auto corpus = generate_corpus(g, config.metapaths, wc);
    if (corpus.walks.empty()) throw DataError("no metapath could be walked on this graph");
    report.warnings = corpus.warnings;

    SkipGramConfig sc = config.skipgram;
    sc.seed = derive_seed(seed, {kSkipGramStream, config.skipgram.seed});
    auto table = train_embeddings(corpus.walks, g.node_count(), sc).table;

    for (const auto& walk : corpus.walks)
        for (std::size_t i = 1; i < walk.size(); ++i) report.footprint.add_pair(g.node(walk[i - 1]).name, g.node(walk[i]).name);

    auto features = [&](const std::vector<NodePair>& pos, const std::vector<NodePair>& neg) {
        Eigen::MatrixXd X(static_cast<Eigen::Index>(pos.size() + neg.size()), table.dim());
        Eigen::Index r = 0;
        for (const auto* list : {&pos, &neg}) {
            for (const auto& [u, v] : *list) {
                auto e = embed_edge(table, u, v, config.edge_op);
                X.row(r++) = Eigen::Map<const Eigen::RowVectorXd>(e.data(), table.dim());
            }
        }
        return X;
    };
    auto Xtr = features(split.train_pos, split.train_neg);
    auto ytr = pos_neg_labels(split.train_pos.size(), split.train_neg.size());
    if (config.shuffle_train_labels) shuffle_labels(ytr, seed);
    for (const auto& [a, b] : concat(split.names(split.train_pos), split.names(split.train_neg))) report.footprint.add_pair(a, b);

    auto clf = make_classifier(config.classifier, derive_seed(seed, {kClassifierStream}));
    clf->fit(Xtr, ytr);
    Eigen::VectorXd s = clf->score(features(split.test_pos, split.test_neg));

    report.n_train = ytr.size();
    report.test_pairs = concat(split.names(split.test_pos), split.names(split.test_neg));
    report.n_test = report.test_pairs.size();
    finish_report(report, std::vector<double>(s.data(), s.data() + s.size()),
                  pos_neg_labels(split.test_pos.size(), split.test_neg.size()));
    report.config = config.to_config();
    report.wall_seconds = seconds_since(t0);
    return report;
}

RunReport run_array_pipeline(const Experiment& exp, const PipelineConfig& config, std::uint64_t seed) {
    const auto t0 = Clock::now();
    const auto& split = exp.split;
    RunReport report;
    report.method = "array";
    report.classifier = config.classifier.kind;
    report.seed = seed;

    auto train_pos = split.names(split.train_pos);
    auto train_neg = split.names(split.train_neg);
    auto features = fit_array_features(exp.records, train_pos, train_neg);
    auto train = one_hot_edge_features(exp.records, features, train_pos, train_neg);
    if (config.shuffle_train_labels) shuffle_labels(train.y, seed);
    for (const auto& [a, b] : concat(train_pos, train_neg)) report.footprint.add_pair(a, b);

    auto test_pos = split.names(split.test_pos);
    auto test_neg = split.names(split.test_neg);
    auto test = one_hot_edge_features(exp.records, features, test_pos, test_neg);

    auto clf = make_classifier(config.classifier, derive_seed(seed, {kClassifierStream}));
    clf->fit(train.X, train.y);
    Eigen::VectorXd s = clf->score(test.X);

    report.n_train = train.y.size();
    report.test_pairs = concat(test_pos, test_neg);
    report.n_test = report.test_pairs.size();
    finish_report(report, std::vector<double>(s.data(), s.data() + s.size()), test.y);
    report.config = config.to_config();
    report.wall_seconds = seconds_since(t0);
    return report;
}

HeteroGraph split_binodal_graph(const Experiment& exp, const ArrayFeatures& features) {
    const auto& split = exp.split;
    std::set<NamePair> hidden;
    for (const auto& p : split.names(split.train_pos)) hidden.insert(p);
    for (const auto& p : split.names(split.test_pos)) hidden.insert(p);

    auto ae_names = adverse_event_names(exp.records);
    HeteroGraph g;
    std::vector<NodeId> trials, aes;
    for (const auto& r : exp.records) trials.push_back(g.add_node(labels::kClinicalTrial, features.vocabulary.encode(r), r.nct_id));
    for (const auto& a : ae_names) {
        auto it = features.ae_block.find(a);
        std::vector<double> attrs = it == features.ae_block.end() ? std::vector<double>{0.0, 0.0} : it->second;
        aes.push_back(g.add_node(labels::kAdverseEvent, std::move(attrs), a));
    }
    for (std::size_t i = 0; i < exp.records.size(); ++i) {
        for (std::size_t j = 0; j < ae_names.size(); ++j) {
            bool positive = exp.records[i].adverse_events.at(ae_names[j]) > 0.0 &&
                            !hidden.count({exp.records[i].nct_id, ae_names[j]});
            g.add_edge(trials[i], aes[j], labels::kTrialEvent, positive ? 1.0 : 0.0);
        }
    }
    g.freeze();
    return g;
}

RunReport run_hinsage_pipeline(const Experiment& exp, const PipelineConfig& config, std::uint64_t seed,
                               SageModel* trained) {
    const auto t0 = Clock::now();
    const auto& split = exp.split;
    RunReport report;
    report.method = "hinsage";
    report.classifier = "link_head";
    report.seed = seed;

    auto train_pos = split.names(split.train_pos);
    auto train_neg = split.names(split.train_neg);
    auto features = fit_array_features(exp.records, train_pos, train_neg);
    auto graph = split_binodal_graph(exp, features);

    std::map<std::string, NodeId> by_name;
    for (NodeId v = 0; v < graph.node_count(); ++v) by_name.emplace(graph.node(v).name, v);
    auto id_of = [&](const std::string& name) {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw DataError("bi-nodal graph has no node '" + name + "'");
        return it->second;
    };

    SageConfig sc = config.sage;
    sc.seed = derive_seed(seed, {kSageStream, config.sage.seed});
    SageModel model(graph, sc);
    SageContext ctx(graph, model);

    std::vector<int> ytr = pos_neg_labels(train_pos.size(), train_neg.size());
    if (config.shuffle_train_labels) shuffle_labels(ytr, seed);
    std::vector<LabeledPair> pairs;
    auto train_names = concat(train_pos, train_neg);
    for (std::size_t i = 0; i < train_names.size(); ++i) {
        pairs.push_back({id_of(train_names[i].first), id_of(train_names[i].second), static_cast<double>(ytr[i])});
        report.footprint.add_pair(train_names[i].first, train_names[i].second);
    }
    for (const auto& e : graph.edges())
        if (!(e.weight && *e.weight == 0.0)) report.footprint.add_pair(graph.node(e.u).name, graph.node(e.v).name);

    train_hinsage(ctx, model, pairs);

    report.test_pairs = concat(split.names(split.test_pos), split.names(split.test_neg));
    std::vector<double> scores;
    for (const auto& [a, b] : report.test_pairs) scores.push_back(link_probability(ctx, model, id_of(a), id_of(b)));
    report.n_train = pairs.size();
    report.n_test = report.test_pairs.size();
    finish_report(report, std::move(scores), pos_neg_labels(split.test_pos.size(), split.test_neg.size()));
    report.config = config.to_config();
    report.wall_seconds = seconds_since(t0);
    if (trained) *trained = std::move(model);
    return report;
}

std::vector<std::pair<std::string, HeteroGraph>> kernel_inputs(const Experiment& exp, const std::string& target_ae) {
    auto ae_names = adverse_event_names(exp.records);
    if (!std::binary_search(ae_names.begin(), ae_names.end(), target_ae)) {
        throw DataError("unknown adverse event '" + target_ae + "'");
    }
    auto graphs = build_constituent_graphs(exp.knowledge_graph, exp.records);
    for (auto& [id, g] : graphs) {
        std::vector<NodeId> keep;
        for (NodeId v = 0; v < g.node_count(); ++v) {
            if (g.label_name(v) == labels::kAdverseEvent && g.node(v).name == target_ae) continue;
            keep.push_back(v);
        }
        if (keep.size() != g.node_count()) g = g.induced_subgraph(keep);
    }
    return graphs;
}

RunReport run_kernel_pipeline(const Experiment& exp, const std::string& target_ae, const PipelineConfig& config,
                              std::uint64_t seed) {
    const auto t0 = Clock::now();
    RunReport report;
    report.method = "kernel[" + target_ae + "]";
    report.classifier = config.kernel_precomputed ? "svm_precomputed" : config.kernel_classifier.kind;
    report.seed = seed;

    auto inputs = kernel_inputs(exp, target_ae);
    const auto n = inputs.size();
    const auto R = static_cast<std::size_t>(config.kernel_reference_size);
    if (R + 2 > n) {
        throw DataError("reference set of " + std::to_string(R) + " leaves too few of " + std::to_string(n) + " graphs");
    }
    auto index = records_by_id(exp.records);

    std::vector<HeteroGraph> graphs;
    std::vector<std::string> ids;
    std::vector<int> labels;
    for (auto& [id, g] : inputs) {
        ids.push_back(id);
        labels.push_back(lookup(index, id).adverse_events.at(target_ae) > 0.0 ? 1 : 0);
        graphs.push_back(std::move(g));
    }
    if (config.kernel.kind == KernelKind::node_pairs_rbf) {
        auto alphabet = label_union(graphs);
        for (auto& g : graphs) g = with_label_attributes(g, alphabet);
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto rng = make_rng(seed, {kKernelStream});
    for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[uniform_index(rng, i + 1)]);
    const std::size_t rest = n - R;
    const auto n_train = static_cast<std::size_t>(std::llround(static_cast<double>(rest) * config.kernel_train_frac));
    if (n_train == 0 || n_train >= rest) throw DataError("kernel split leaves an empty train or test set");

    auto pick = [&](std::size_t begin, std::size_t end, std::vector<HeteroGraph>& gs, std::vector<std::string>& is,
                    std::vector<int>* ys) {
        for (std::size_t k = begin; k < end; ++k) {
            gs.push_back(graphs[order[k]]);
            is.push_back(ids[order[k]]);
            if (ys) ys->push_back(labels[order[k]]);
        }
    };
    std::vector<HeteroGraph> ref_g, tr_g, te_g;
    std::vector<std::string> ref_id, tr_id, te_id;
    std::vector<int> ytr, yte;
    pick(0, R, ref_g, ref_id, nullptr);
    pick(R, R + n_train, tr_g, tr_id, &ytr);
    pick(R + n_train, n, te_g, te_id, &yte);
    require_two_classes(yte);
    if (config.shuffle_train_labels) shuffle_labels(ytr, seed);
    for (const auto& id : ref_id) report.footprint.training_items.insert(id);
    for (const auto& id : tr_id) report.footprint.training_items.insert(id);

    Eigen::VectorXd s;
    if (config.kernel_precomputed) {
        auto ktr = gram_matrix(tr_g, tr_id, config.kernel);
        auto kte = gram_matrix(te_g, te_id, tr_g, tr_id, config.kernel);
        SvmConfig svm;
        svm.C = config.kernel_classifier.params.get_double("C", svm.C);
        s = train_svm_precomputed(ktr.values, ytr, svm).decision(kte.values);
    } else {
        auto ftr = gram_matrix(tr_g, tr_id, ref_g, ref_id, config.kernel);
        auto fte = gram_matrix(te_g, te_id, ref_g, ref_id, config.kernel);
        auto clf = make_classifier(config.kernel_classifier, derive_seed(seed, {kClassifierStream}));
        clf->fit(ftr.values, ytr);
        s = clf->score(fte.values);
    }

    report.n_train = ytr.size();
    for (const auto& id : te_id) report.test_pairs.emplace_back(id, target_ae);
    report.n_test = te_id.size();
    finish_report(report, std::vector<double>(s.data(), s.data() + s.size()), yte);
    report.config = config.to_config();
    report.wall_seconds = seconds_since(t0);
    return report;
}

std::vector<CompareRow> compare_report(const std::vector<RunReport>& reports) {
    std::vector<CompareRow> rows;
    for (const auto& r : reports) {
        auto it = std::find_if(rows.begin(), rows.end(),
                               [&](const CompareRow& row) { return row.method == r.method && row.classifier == r.classifier; });
        if (it == rows.end()) {
            rows.push_back({r.method, r.classifier, {}, 0.0, std::nullopt});
            it = rows.end() - 1;
        }
        it->aucs.push_back(r.auc);
    }
    for (auto& row : rows) {
        const auto k = static_cast<double>(row.aucs.size());
        row.mean = std::accumulate(row.aucs.begin(), row.aucs.end(), 0.0) / k;
        if (row.aucs.size() > 1) {
            double ss = 0.0;
            for (double a : row.aucs) ss += (a - row.mean) * (a - row.mean);
            row.sd = std::sqrt(ss / (k - 1.0));
        }
    }
    return rows;
}

void write_compare_tsv(std::ostream& out, const std::vector<CompareRow>& rows) {
    std::size_t runs = 0;
    for (const auto& r : rows) runs = std::max(runs, r.aucs.size());
    out << "method\tclassifier";
    for (std::size_t i = 0; i < runs; ++i) out << "\trun_" << i + 1;
    out << "\tmean\tsd\n";
    for (const auto& r : rows) {
        out << r.method << '\t' << r.classifier;
        for (std::size_t i = 0; i < runs; ++i) out << '\t' << (i < r.aucs.size() ? format_fixed(r.aucs[i], 3) : "");
        out << '\t' << format_fixed(r.mean, 3) << '\t' << (r.sd ? format_fixed(*r.sd, 3) : "") << '\n';
    }
}

void write_run_report_tsv(std::ostream& out, const std::vector<RunReport>& reports) {
    out << "method\tclassifier\tseed\tauc\tn_train\tn_test\tconfig\n";
    for (const auto& r : reports) {
        out << r.method << '\t' << r.classifier << '\t' << r.seed << '\t' << format_double(r.auc) << '\t' << r.n_train
            << '\t' << r.n_test << '\t' << flat_config(r.config) << '\n';
    }
}

void write_timings_tsv(std::ostream& out, const std::vector<RunReport>& reports) {
    out << "method\tclassifier\tseed\twall_seconds\n";
    for (const auto& r : reports) {
        out << r.method << '\t' << r.classifier << '\t' << r.seed << '\t' << format_fixed(r.wall_seconds, 3) << '\n';
    }
}

std::vector<RunReport> read_run_report_tsv(std::istream& in) {
    std::vector<RunReport> out;
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line) || line.rfind("method\tclassifier\tseed\tauc", 0) != 0) {
        throw SchemaError("not a run report: expected header 'method\\tclassifier\\tseed\\tauc...'");
    }
    ++lineno;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto f = split(line, '\t');
        if (f.size() < 4) throw RowError(lineno, "expected at least 4 columns");
        RunReport r;
        r.method = f[0];
        r.classifier = f[1];
        long long seed = 0;
        if (!parse_int(f[2], seed) || seed < 0) throw RowError(lineno, "bad seed '" + f[2] + "'");
        r.seed = static_cast<std::uint64_t>(seed);
        if (!parse_double(f[3], r.auc) || r.auc < 0 || r.auc > 1) throw RowError(lineno, "bad auc '" + f[3] + "'");
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace hetlink
