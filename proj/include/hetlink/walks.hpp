#pragma once

#include "hetlink/hetgraph.hpp"
#include "hetlink/rng.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hetlink {

/// Ordered node-label names a walk must follow. labels.front() is the anchor.
struct MetaPathSpec {
    std::vector<std::string> labels;

    std::string to_string() const; // comma-joined
    bool operator==(const MetaPathSpec&) const = default;
};

/// Alternative label names accepted in metapath files.
using LabelAliases = std::map<std::string, std::string>;

/// "Side Effect" -> "Adverse Event", "Disease" -> "Condition",
/// "Specific Disease" -> "Specific Condition".
LabelAliases default_label_aliases();

/// The sixteen trial-graph metapaths, in alias form.
std::vector<MetaPathSpec> default_metapaths();

/// One metapath per line, comma-separated label names; '#' comments allowed.
std::vector<MetaPathSpec> parse_metapaths(std::istream& in);
std::vector<MetaPathSpec> load_metapaths(const std::filesystem::path& path);
void write_metapaths(std::ostream& out, const std::vector<MetaPathSpec>& metapaths);

/// Resolve names (through aliases) to graph label ids and check that each
/// consecutive pair, including the wrap from last to second label, is joined
/// by at least one edge in the graph. On failure returns nullopt and sets `problem`.
std::optional<std::vector<LabelId>> resolve_metapath(const HeteroGraph& graph, const MetaPathSpec& spec,
                                                     const LabelAliases& aliases, std::string* problem = nullptr);

struct WalkConfig {
    int walk_length = 200;   // nodes per walk, including the start
    int walks_per_node = 1;
    double p = 1.0;          // return parameter
    double q = 1.0;          // in-out parameter
    std::uint64_t seed = 0;
    int threads = 1;

    void validate() const;
};

struct StepDistribution {
    std::vector<NodeId> candidates;
    std::vector<double> probs;

    bool empty() const noexcept { return candidates.empty(); }
};

/// Second-order transition probabilities from `curr` to its neighbors with
/// label `allowed`. Unnormalised weights are 1/p to return to `prev`, 1 for
/// neighbors of `prev`, 1/q otherwise; uniform when there is no `prev`.
/// Parallel edges do not add weight.
StepDistribution next_step_distribution(const HeteroGraph& graph, std::optional<NodeId> prev, NodeId curr,
                                        LabelId allowed, const WalkConfig& config);

/// One walk starting at `start`. Step i (0-based) lands on label
/// metapath[(i mod (len-1)) + 1]; the walk stops early at a dead end.
std::vector<NodeId> metapath_walk(const HeteroGraph& graph, NodeId start, std::span<const LabelId> metapath,
                                  const WalkConfig& config, Rng& rng);

struct WalkCorpus {
    std::vector<std::vector<NodeId>> walks;
    std::vector<std::vector<LabelId>> label_sequences;
    std::vector<std::size_t> metapath_of_walk;
    std::vector<std::string> warnings;

    std::size_t token_count() const;
};

/// walks_per_node walks from every anchor-labelled node, for each metapath.
/// Metapaths that cannot be resolved, or whose anchor label is absent, are
/// skipped with a warning. Each (metapath, node, repetition) task has its own
/// rng stream, so the corpus is identical for any thread count.
WalkCorpus generate_corpus(const HeteroGraph& graph, const std::vector<MetaPathSpec>& metapaths,
                           const WalkConfig& config, const LabelAliases& aliases = default_label_aliases());

/// One walk per line, space-separated node ids.
void write_corpus(std::ostream& out, const WalkCorpus& corpus);

/// FNV-1a over walk contents and boundaries.
std::uint64_t corpus_hash(const WalkCorpus& corpus);

} // namespace hetlink
