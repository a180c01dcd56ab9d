#pragma once

#include "hetlink/config.hpp"
#include "hetlink/hetgraph.hpp"
#include "hetlink/ingest.hpp"
#include "hetlink/kernels.hpp"
#include "hetlink/learn.hpp"
#include "hetlink/records.hpp"
#include "hetlink/sage.hpp"
#include "hetlink/skipgram.hpp"
#include "hetlink/synthetic.hpp"
#include "hetlink/walks.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace hetlink {

using NodePair = std::pair<NodeId, NodeId>;
using NamePair = std::pair<std::string, std::string>;

/// Link-prediction split of one edge label. Pairs are oriented (u-label, v-label)
/// as in the first edge of that label; negatives are non-edges of the original graph.
struct EdgeSplit {
    std::string edge_label;
    std::vector<NodePair> train_pos;
    std::vector<NodePair> train_neg;
    std::vector<NodePair> test_pos;
    std::vector<NodePair> test_neg;
    HeteroGraph residual_graph; // original minus train and test positives

    std::vector<NamePair> names(const std::vector<NodePair>& pairs) const;
};

EdgeSplit split_edges(const HeteroGraph& graph, std::string_view edge_label, double test_frac, double train_frac,
                      std::uint64_t seed);

/// Everything a trained model was allowed to see, keyed by node names.
struct TrainingFootprint {
    std::set<NamePair> pairs;            // unordered pairs stored both ways
    std::set<std::string> training_items; // graph ids used as training rows or reference columns

    void add_pair(const std::string& a, const std::string& b);
    bool touches(const std::string& a, const std::string& b) const;
};

struct RunReport {
    std::string method;
    std::string classifier;
    std::uint64_t seed = 0;
    double auc = 0.0;
    RocSummary roc;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    double wall_seconds = 0.0; // kept out of the report TSV
    Config config;
    TrainingFootprint footprint;
    std::vector<NamePair> test_pairs;
    std::vector<int> test_labels;
    std::vector<double> test_scores;
    std::vector<std::string> warnings;
};

struct PipelineConfig {
    SyntheticConfig data;
    double test_frac = 0.10;
    double train_frac = 0.40;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    bool shuffle_train_labels = false;

    WalkConfig walk;
    std::vector<MetaPathSpec> metapaths = default_metapaths();
    SkipGramConfig skipgram;
    EdgeOp edge_op = EdgeOp::hadamard;
    ClassifierSpec classifier;

    SageConfig sage;

    KernelConfig kernel;
    ClassifierSpec kernel_classifier{"svm", {}, false};
    bool kernel_precomputed = false;
    int kernel_reference_size = 50;
    double kernel_train_frac = 0.8;
    std::vector<std::string> kernel_aes; // empty: the first five AEs

    PipelineConfig();

    /// Sectioned keys: data.*, split.*, walk.*, skipgram.*, metapath.*,
    /// classifier.*, sage.*, kernel.*, kernel_classifier.*. Unknown keys throw ConfigError.
    static PipelineConfig from_config(const Config& cfg);
    Config to_config() const;

    /// Reduced sizes for quick runs: dim 64, walk length 40.
    static PipelineConfig desk_scale();
};

/// Keys under `prefix.`, with the prefix removed.
Config config_section(const Config& cfg, const std::string& prefix);

/// Trial block (multi-hot over a vocabulary fit on training trials) followed
/// by the AE block (incidence among training pairs, mean fraction of training positives).
struct ArrayFeatures {
    TrialVocabulary vocabulary;
    std::map<std::string, std::vector<double>> ae_block;

    std::vector<double> row(const TrialRecord& trial, const std::string& ae) const;
};

ArrayFeatures fit_array_features(const std::vector<TrialRecord>& records, const std::vector<NamePair>& train_pos,
                                 const std::vector<NamePair>& train_neg);

Dataset one_hot_edge_features(const std::vector<TrialRecord>& records, const ArrayFeatures& features,
                              const std::vector<NamePair>& pos, const std::vector<NamePair>& neg);

/// Inputs shared by every pipeline in one comparison.
struct Experiment {
    std::vector<TrialRecord> records;
    KeywordSplit conditions;
    KeywordSplit drugs;
    HeteroGraph knowledge_graph;
    EdgeSplit split;
};

Experiment prepare_experiment(std::vector<TrialRecord> records, const PipelineConfig& config, std::uint64_t seed);

RunReport run_metapath_pipeline(const Experiment& exp, const PipelineConfig& config, std::uint64_t seed);
RunReport run_array_pipeline(const Experiment& exp, const PipelineConfig& config, std::uint64_t seed);

/// Bi-nodal graph for one split: train and test positives carry weight 0 and
/// AE attributes come from training pairs only.
HeteroGraph split_binodal_graph(const Experiment& exp, const ArrayFeatures& features);

RunReport run_hinsage_pipeline(const Experiment& exp, const PipelineConfig& config, std::uint64_t seed,
                               SageModel* trained = nullptr);

/// Constituent graphs with the target AE node removed, in record order.
std::vector<std::pair<std::string, HeteroGraph>> kernel_inputs(const Experiment& exp, const std::string& target_ae);

RunReport run_kernel_pipeline(const Experiment& exp, const std::string& target_ae, const PipelineConfig& config,
                              std::uint64_t seed);

/// Comparison rows: per (method, classifier) AUC per seed, mean and sample SD to 3 decimals.
struct CompareRow {
    std::string method;
    std::string classifier;
    std::vector<double> aucs;
    double mean = 0.0;
    std::optional<double> sd;
};

std::vector<CompareRow> compare_report(const std::vector<RunReport>& reports);
void write_compare_tsv(std::ostream& out, const std::vector<CompareRow>& rows);

void write_run_report_tsv(std::ostream& out, const std::vector<RunReport>& reports);
void write_timings_tsv(std::ostream& out, const std::vector<RunReport>& reports);

/// Reads back the columns of a RunReport TSV (method, classifier, seed, auc).
std::vector<RunReport> read_run_report_tsv(std::istream& in);

} // namespace hetlink
