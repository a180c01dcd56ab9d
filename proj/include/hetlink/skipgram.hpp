#pragma once

#include "hetlink/config.hpp"
#include "hetlink/hetgraph.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hetlink {

struct SkipGramConfig {
    int dim = 512;
    int window = 5;
    int negatives = 5;
    int epochs = 5;
    double learning_rate = 0.025;
    double noise_exponent = 0.75;
    std::uint64_t seed = 0;
    int threads = 1; // >1 gives up bitwise reproducibility

    void validate() const;
    static SkipGramConfig from_config(const Config& cfg);
    Config to_config() const;
};

/// Input vectors (the node embedding) and output (context) vectors, row-major.
class EmbeddingTable {
public:
    EmbeddingTable() = default;
    EmbeddingTable(std::size_t num_nodes, int dim);

    std::size_t size() const noexcept { return num_nodes_; }
    int dim() const noexcept { return dim_; }

    std::span<double> input(NodeId v);
    std::span<const double> input(NodeId v) const;
    std::span<double> output(NodeId v);
    std::span<const double> output(NodeId v) const;

    std::vector<double>& input_data() noexcept { return input_; }
    std::vector<double>& output_data() noexcept { return output_; }
    const std::vector<double>& input_data() const noexcept { return input_; }
    const std::vector<double>& output_data() const noexcept { return output_; }

    bool operator==(const EmbeddingTable&) const = default;

private:
    std::size_t num_nodes_ = 0;
    int dim_ = 0;
    std::vector<double> input_;
    std::vector<double> output_;
};

/// Exact softmax of n given u over all nodes, input·input dot products.
double softmax_prob(const EmbeddingTable& table, NodeId u, NodeId n);

struct SgnsGradients {
    double loss = 0.0;
    std::vector<double> center;                // d loss / d input(center)
    std::vector<double> context;               // d loss / d output(context)
    std::vector<std::vector<double>> negatives; // one per entry of the negatives list
};

/// Negative-sampling loss for one (center, context) pair. Gradients for a
/// repeated negative are reported per occurrence and must be summed.
SgnsGradients sgns_loss_and_grads(const EmbeddingTable& table, NodeId center, NodeId context,
                                  std::span<const NodeId> negatives);

/// Every (center, context) pair within `window` positions of each other.
std::vector<std::pair<NodeId, NodeId>> training_pairs(const std::vector<std::vector<NodeId>>& walks, int window);

struct SkipGramResult {
    EmbeddingTable table;
    std::vector<double> epoch_losses; // mean SGNS loss per epoch
};

/// num_nodes must exceed every id appearing in the walks.
SkipGramResult train_embeddings(const std::vector<std::vector<NodeId>>& walks, std::size_t num_nodes,
                                const SkipGramConfig& config);

enum class EdgeOp { hadamard, average, l1, l2 };

EdgeOp parse_edge_op(std::string_view name);
std::string_view edge_op_name(EdgeOp op);

std::vector<double> embed_edge(std::span<const double> a, std::span<const double> b, EdgeOp op);
std::vector<double> embed_edge(const EmbeddingTable& table, NodeId a, NodeId b, EdgeOp op);

/// "# key=value" header lines, then "id v1 ... vd" per node (input vectors).
void write_embeddings(std::ostream& out, const EmbeddingTable& table, const Config& header);
void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table, const Config& header);

struct LoadedEmbeddings {
    Config header;
    std::vector<std::vector<double>> vectors;
};
LoadedEmbeddings read_embeddings(std::istream& in);
LoadedEmbeddings load_embeddings(const std::filesystem::path& path);

double cosine(std::span<const double> a, std::span<const double> b);

} // namespace hetlink
