// hetlink command-line driver.
#include "hetlink/errors.hpp"
#include "hetlink/graph_io.hpp"
#include "hetlink/pipeline.hpp"
#include "hetlink/text.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <thread>

namespace fs = std::filesystem;
using namespace hetlink;

namespace {

struct Common {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string out = ".";
    std::string data;
};

void add_common(CLI::App* cmd, Common& c, bool with_data) {
    cmd->add_option("--config", c.config_path, "flat key=value config file")->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "run seed");
    cmd->add_option("--out", c.out, "output directory");
    if (with_data) cmd->add_option("--data", c.data, "trial CSV; synthetic data from the config when omitted");
}

PipelineConfig load_config(const Common& c) {
    Config cfg;
    if (!c.config_path.empty()) cfg = Config::load(c.config_path);
    return PipelineConfig::from_config(cfg);
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

std::vector<TrialRecord> load_records(const Common& c, const PipelineConfig& pc) {
    if (!c.data.empty()) return parse_trials_csv(fs::path(c.data));
    return generate_synthetic(pc.data);
}

std::vector<std::uint64_t> run_seeds(const Common& c, const PipelineConfig& pc) {
    if (c.seed) return {*c.seed};
    return pc.seeds;
}

std::vector<std::string> kernel_targets(const PipelineConfig& pc, const std::vector<TrialRecord>& records) {
    if (!pc.kernel_aes.empty()) return pc.kernel_aes;
    auto names = adverse_event_names(records);
    names.resize(std::min<std::size_t>(names.size(), 5));
    return names;
}

std::string file_tag(const RunReport& r) {
    std::string tag = r.method + "_" + r.classifier + "_" + std::to_string(r.seed);
    for (char& ch : tag)
        if (ch == '[' || ch == ']' || ch == '/') ch = '_';
    return tag;
}

void write_scores(const fs::path& path, const RunReport& r) {
    auto out = open_out(path);
    out << "a\tb\tlabel\tscore\n";
    for (std::size_t i = 0; i < r.test_pairs.size(); ++i) {
        out << r.test_pairs[i].first << '\t' << r.test_pairs[i].second << '\t' << r.test_labels[i] << '\t'
            << format_double(r.test_scores[i]) << '\n';
    }
}

void write_outputs(const fs::path& dir, const std::vector<RunReport>& reports) {
    fs::create_directories(dir);
    {
        auto out = open_out(dir / "report.tsv");
        write_run_report_tsv(out, reports);
    }
    {
        auto out = open_out(dir / "timings.tsv");
        write_timings_tsv(out, reports);
    }
    for (const auto& r : reports) {
        auto out = open_out(dir / "roc" / (file_tag(r) + ".tsv"));
        write_roc_tsv(out, r.roc);
        write_scores(dir / "scores" / (file_tag(r) + ".tsv"), r);
    }
    auto out = open_out(dir / "compare.tsv");
    write_compare_tsv(out, compare_report(reports));
}

void write_kde(const fs::path& path, const std::vector<RunReport>& reports) {
    std::vector<double> aucs;
    for (const auto& r : reports)
        if (r.method.rfind("kernel[", 0) == 0) aucs.push_back(r.auc);
    if (aucs.size() < 2) return;
    std::vector<double> grid;
    for (int i = 0; i <= 100; ++i) grid.push_back(i / 100.0);
    auto out = open_out(path);
    write_kde_tsv(out, grid, kde(aucs, std::nullopt, grid));
}

/// Runs `one(seed)` for each seed, concurrently when parallel > 1, keeping seed order.
std::vector<RunReport> for_seeds(const std::vector<std::uint64_t>& seeds, int parallel,
                                 const std::function<std::vector<RunReport>(std::uint64_t)>& one) {
    std::vector<std::vector<RunReport>> per_seed(seeds.size());
    if (parallel <= 1 || seeds.size() <= 1) {
        for (std::size_t i = 0; i < seeds.size(); ++i) per_seed[i] = one(seeds[i]);
    } else {
        std::vector<std::exception_ptr> errors(seeds.size());
        std::size_t next = 0;
        std::mutex m;
        auto worker = [&] {
            for (;;) {
                std::size_t i;
                {
                    std::lock_guard lock(m);
                    if (next == seeds.size()) return;
                    i = next++;
                }
                try {
                    per_seed[i] = one(seeds[i]);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            }
        };
        std::vector<std::thread> pool;
        for (int t = 0; t < std::min<int>(parallel, static_cast<int>(seeds.size())); ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
    std::vector<RunReport> all;
    for (auto& v : per_seed)
        for (auto& r : v) all.push_back(std::move(r));
    return all;
}

void print_summary(const std::vector<RunReport>& reports) {
    for (const auto& row : compare_report(reports)) {
        std::cout << row.method << '\t' << row.classifier << "\tmean_auc=" << format_fixed(row.mean, 3);
        if (row.sd) std::cout << "\tsd=" << format_fixed(*row.sd, 3);
        std::cout << '\n';
    }
}

int run(int argc, char** argv) {
    CLI::App app{"hetlink: link prediction on heterogeneous trial graphs"};
    app.require_subcommand(1);

    Common gen_opts;
    auto* gen = app.add_subcommand("generate", "write a planted synthetic trial CSV");
    add_common(gen, gen_opts, false);

    Common ingest_opts;
    std::string ingest_in;
    auto* ingest = app.add_subcommand("ingest", "parse and normalize a trial CSV");
    ingest->add_option("input", ingest_in, "trial CSV")->required()->check(CLI::ExistingFile);
    add_common(ingest, ingest_opts, false);

    Common graph_opts;
    std::string graph_kind;
    auto* build = app.add_subcommand("build-graph", "build a graph from trial data");
    build->add_option("kind", graph_kind, "knowledge, binodal or constituent")
        ->required()
        ->check(CLI::IsMember({"knowledge", "binodal", "constituent"}));
    add_common(build, graph_opts, true);

    Common embed_opts;
    auto* embed = app.add_subcommand("embed", "metapath walks and skip-gram embeddings of the knowledge graph");
    add_common(embed, embed_opts, true);

    Common train_opts;
    std::string method;
    int train_parallel = 1;
    std::string checkpoint;
    auto* train = app.add_subcommand("train", "run one pipeline and score its test pairs");
    train->add_option("method", method, "metapath, hinsage, kernel or array")
        ->required()
        ->check(CLI::IsMember({"metapath", "hinsage", "kernel", "array"}));
    add_common(train, train_opts, true);
    train->add_option("--parallel-runs", train_parallel, "seeds run concurrently")->check(CLI::PositiveNumber);
    train->add_option("--checkpoint", checkpoint, "hinsage: save the trained model of the last seed here");

    std::string eval_scores;
    Common eval_opts;
    auto* evaluate = app.add_subcommand("evaluate", "ROC and AUC of a scores TSV (columns a, b, label, score)");
    evaluate->add_option("scores", eval_scores, "scores TSV")->required()->check(CLI::ExistingFile);
    add_common(evaluate, eval_opts, false);

    std::vector<std::string> compare_in;
    Common compare_opts;
    auto* compare = app.add_subcommand("compare", "per-method AUC table from run report TSVs");
    compare->add_option("reports", compare_in, "report TSVs")->required()->check(CLI::ExistingFile);
    add_common(compare, compare_opts, false);

    Common repro_opts;
    int repro_parallel = 1;
    bool desk = false;
    std::vector<std::string> repro_methods{"metapath", "array", "hinsage", "kernel"};
    auto* reproduce = app.add_subcommand("reproduce", "every pipeline over every seed on one dataset");
    add_common(reproduce, repro_opts, true);
    reproduce->add_option("--parallel-runs", repro_parallel, "seeds run concurrently")->check(CLI::PositiveNumber);
    reproduce->add_flag("--desk", desk, "start from the reduced desk-scale defaults");
    reproduce->add_option("--methods", repro_methods, "subset of metapath, array, hinsage, kernel")
        ->check(CLI::IsMember({"metapath", "hinsage", "kernel", "array"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (gen->parsed()) {
        auto pc = load_config(gen_opts);
        if (gen_opts.seed) pc.data.seed = *gen_opts.seed;
        auto records = generate_synthetic(pc.data);
        fs::create_directories(gen_opts.out);
        write_trials_csv(fs::path(gen_opts.out) / "trials.csv", records);
        std::cout << "wrote " << records.size() << " trials\n";
    } else if (ingest->parsed()) {
        auto records = parse_trials_csv(fs::path(ingest_in));
        auto aes = adverse_event_names(records);
        fs::create_directories(ingest_opts.out);
        write_trials_csv(fs::path(ingest_opts.out) / "trials.csv", records);
        auto conditions = condition_split(records);
        auto drugs = drug_split(records);
        auto out = open_out(fs::path(ingest_opts.out) / "vocabulary.tsv");
        out << "family\tterm\n";
        for (const auto& k : conditions.keywords) out << "condition\t" << k << '\n';
        for (const auto& k : conditions.specifics) out << "specific_condition\t" << k << '\n';
        for (const auto& k : drugs.keywords) out << "drug\t" << k << '\n';
        for (const auto& k : drugs.specifics) out << "specific_drug\t" << k << '\n';
        std::cout << records.size() << " trials, " << aes.size() << " adverse events\n";
    } else if (build->parsed()) {
        auto pc = load_config(graph_opts);
        if (graph_opts.seed) pc.data.seed = *graph_opts.seed;
        auto records = load_records(graph_opts, pc);
        fs::path out(graph_opts.out);
        auto report = [](const HeteroGraph& g) {
            auto counts = g.count_by_label();
            for (const auto& [label, n] : counts.nodes) std::cout << "node\t" << label << '\t' << n << '\n';
            for (const auto& [label, n] : counts.edges) std::cout << "edge\t" << label << '\t' << n << '\n';
        };
        if (graph_kind == "binodal") {
            auto g = build_binodal_graph(records);
            save_graph(out, g);
            report(g);
        } else {
            auto kg = build_knowledge_graph(records, condition_split(records), drug_split(records));
            if (graph_kind == "knowledge") {
                save_graph(out, kg);
                report(kg);
            } else {
                auto graphs = build_constituent_graphs(kg, records);
                for (const auto& [id, g] : graphs) save_graph(out / id, g);
                std::cout << graphs.size() << " constituent graphs\n";
            }
        }
    } else if (embed->parsed()) {
        auto pc = load_config(embed_opts);
        auto records = load_records(embed_opts, pc);
        auto kg = build_knowledge_graph(records, condition_split(records), drug_split(records));
        const std::uint64_t seed = embed_opts.seed.value_or(pc.seeds.front());
        WalkConfig wc = pc.walk;
        wc.seed = derive_seed(seed, {1, pc.walk.seed});
        auto corpus = generate_corpus(kg, pc.metapaths, wc);
        for (const auto& w : corpus.warnings) std::cerr << "warning: " << w << '\n';
        SkipGramConfig sc = pc.skipgram;
        sc.seed = derive_seed(seed, {2, pc.skipgram.seed});
        auto result = train_embeddings(corpus.walks, kg.node_count(), sc);
        fs::path out(embed_opts.out);
        save_graph(out / "graph", kg);
        {
            auto f = open_out(out / "corpus.txt");
            write_corpus(f, corpus);
        }
        Config header = sc.to_config();
        header.set("corpus_hash", std::to_string(corpus_hash(corpus)));
        save_embeddings(out / "embeddings.txt", result.table, header);
        std::cout << corpus.walks.size() << " walks, " << corpus.token_count() << " tokens, final loss "
                  << format_fixed(result.epoch_losses.empty() ? 0.0 : result.epoch_losses.back(), 4) << '\n';
    } else if (train->parsed()) {
        auto pc = load_config(train_opts);
        auto records = load_records(train_opts, pc);
        auto targets = method == "kernel" ? kernel_targets(pc, records) : std::vector<std::string>{};
        std::mutex model_mutex;
        SageModel last_model;
        auto reports = for_seeds(run_seeds(train_opts, pc), train_parallel, [&](std::uint64_t seed) {
            auto exp = prepare_experiment(records, pc, seed);
            std::vector<RunReport> out;
            if (method == "metapath") out.push_back(run_metapath_pipeline(exp, pc, seed));
            if (method == "array") out.push_back(run_array_pipeline(exp, pc, seed));
            if (method == "hinsage") {
                SageModel model;
                out.push_back(run_hinsage_pipeline(exp, pc, seed, &model));
                std::lock_guard lock(model_mutex);
                last_model = std::move(model);
            }
            if (method == "kernel")
                for (const auto& ae : targets) out.push_back(run_kernel_pipeline(exp, ae, pc, seed));
            return out;
        });
        write_outputs(train_opts.out, reports);
        if (method == "kernel") write_kde(fs::path(train_opts.out) / "kde.tsv", reports);
        if (method == "hinsage" && !checkpoint.empty()) last_model.save(checkpoint);
        print_summary(reports);
    } else if (evaluate->parsed()) {
        std::ifstream in(eval_scores);
        std::string line;
        std::getline(in, line);
        if (split(line, '\t').size() != 4) throw SchemaError("expected header a, b, label, score");
        std::vector<double> scores;
        std::vector<int> labels;
        std::size_t lineno = 1;
        while (std::getline(in, line)) {
            ++lineno;
            if (line.empty()) continue;
            auto f = split(line, '\t');
            long long label = 0;
            double score = 0.0;
            if (f.size() != 4 || !parse_int(f[2], label) || (label != 0 && label != 1) || !parse_double(f[3], score)) {
                throw RowError(lineno, "expected a, b, 0|1 label, numeric score");
            }
            labels.push_back(static_cast<int>(label));
            scores.push_back(score);
        }
        auto roc = roc_auc(scores, labels);
        auto out = open_out(fs::path(eval_opts.out) / "roc.tsv");
        write_roc_tsv(out, roc);
        std::cout << "auc=" << format_double(roc.auc) << '\n';
    } else if (compare->parsed()) {
        std::vector<RunReport> all;
        for (const auto& path : compare_in) {
            std::ifstream in(path);
            auto part = read_run_report_tsv(in);
            all.insert(all.end(), part.begin(), part.end());
        }
        if (all.empty()) throw DataError("no runs in the given reports");
        auto out = open_out(fs::path(compare_opts.out) / "compare.tsv");
        write_compare_tsv(out, compare_report(all));
        print_summary(all);
    } else if (reproduce->parsed()) {
        Config cfg;
        if (!repro_opts.config_path.empty()) cfg = Config::load(repro_opts.config_path);
        PipelineConfig pc = PipelineConfig::from_config(cfg);
        if (desk) {
            // Desk defaults first, then anything the file sets explicitly.
            Config merged = PipelineConfig::desk_scale().to_config();
            for (const auto& [k, v] : cfg.values()) merged.set(k, v);
            pc = PipelineConfig::from_config(merged);
        }
        auto records = load_records(repro_opts, pc);
        auto targets = kernel_targets(pc, records);
        auto has = [&](const char* m) { return std::find(repro_methods.begin(), repro_methods.end(), m) != repro_methods.end(); };
        auto reports = for_seeds(run_seeds(repro_opts, pc), repro_parallel, [&](std::uint64_t seed) {
            auto exp = prepare_experiment(records, pc, seed);
            std::vector<RunReport> out;
            if (has("metapath")) out.push_back(run_metapath_pipeline(exp, pc, seed));
            if (has("array")) out.push_back(run_array_pipeline(exp, pc, seed));
            if (has("hinsage")) out.push_back(run_hinsage_pipeline(exp, pc, seed));
            if (has("kernel"))
                for (const auto& ae : targets) out.push_back(run_kernel_pipeline(exp, ae, pc, seed));
            return out;
        });
        write_outputs(repro_opts.out, reports);
        write_kde(fs::path(repro_opts.out) / "kde.tsv", reports);
        print_summary(reports);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
