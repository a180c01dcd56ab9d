#include "hetlink/skipgram.hpp"

#include "hetlink/errors.hpp"
#include "hetlink/rng.hpp"
#include "hetlink/text.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

namespace hetlink {
namespace {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

// -log(sigmoid(x)), stable for large |x|
double neg_log_sigmoid(double x) {
    return x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct PlainAccess {
    static double load(double& x) { return x; }
    static void store(double& x, double v) { x = v; }
};

struct RelaxedAccess {
    static double load(double& x) { return std::atomic_ref<double>(x).load(std::memory_order_relaxed); }
    static void store(double& x, double v) { std::atomic_ref<double>(x).store(v, std::memory_order_relaxed); }
};

class NoiseSampler {
public:
    NoiseSampler(const std::vector<std::vector<NodeId>>& walks, std::size_t num_nodes, double exponent) {
        std::vector<double> counts(num_nodes, 0.0);
        for (const auto& w : walks)
            for (auto v : w) counts[v] += 1.0;
        double total = 0.0;
        for (std::size_t v = 0; v < num_nodes; ++v) {
            if (counts[v] == 0.0) continue;
            total += std::pow(counts[v], exponent);
            ids_.push_back(static_cast<NodeId>(v));
            cumulative_.push_back(total);
        }
        for (auto& c : cumulative_) c /= total;
    }

    std::size_t support() const { return ids_.size(); }

    NodeId draw(Rng& rng) const {
        double u = uniform01(rng);
        auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
        if (it == cumulative_.end()) --it;
        return ids_[static_cast<std::size_t>(it - cumulative_.begin())];
    }

private:
    std::vector<NodeId> ids_;
    std::vector<double> cumulative_;
};

template <class Access>
double sgd_pair(EmbeddingTable& table, NodeId center, NodeId context, const NoiseSampler& noise, int negatives,
                double lr, Rng& rng, std::vector<double>& grad_center) {
    const auto dim = static_cast<std::size_t>(table.dim());
    auto in = table.input(center);
    std::fill(grad_center.begin(), grad_center.end(), 0.0);
    double loss = 0.0;

    auto step = [&](NodeId target, double label) {
        auto out = table.output(target);
        double d = 0.0;
        for (std::size_t k = 0; k < dim; ++k) d += Access::load(in[k]) * Access::load(out[k]);
        loss += label > 0 ? neg_log_sigmoid(d) : neg_log_sigmoid(-d);
        double g = sigmoid(d) - label;
        for (std::size_t k = 0; k < dim; ++k) {
            double o = Access::load(out[k]);
            grad_center[k] += g * o;
            Access::store(out[k], o - lr * g * Access::load(in[k]));
        }
    };

    step(context, 1.0);
    const bool can_sample = noise.support() > 1;
    for (int n = 0; n < negatives && can_sample; ++n) {
        NodeId neg = noise.draw(rng);
        for (int tries = 0; neg == context && tries < 64; ++tries) neg = noise.draw(rng);
        if (neg == context) continue;
        step(neg, 0.0);
    }
    for (std::size_t k = 0; k < dim; ++k) Access::store(in[k], Access::load(in[k]) - lr * grad_center[k]);
    return loss;
}

} // namespace

void SkipGramConfig::validate() const {
    if (dim <= 0 || window <= 0 || negatives <= 0 || epochs <= 0 || threads <= 0) {
        throw ConfigError("skip-gram dim, window, negatives, epochs and threads must be positive");
    }
    if (!(learning_rate > 0.0)) throw ConfigError("skip-gram learning_rate must be positive");
    if (!(noise_exponent >= 0.0 && noise_exponent <= 1.0)) throw ConfigError("noise_exponent must lie in [0,1]");
}

SkipGramConfig SkipGramConfig::from_config(const Config& cfg) {
    SkipGramConfig c;
    c.dim = static_cast<int>(cfg.get_int("dim", c.dim));
    c.window = static_cast<int>(cfg.get_int("window", c.window));
    c.negatives = static_cast<int>(cfg.get_int("negatives", c.negatives));
    c.epochs = static_cast<int>(cfg.get_int("epochs", c.epochs));
    c.learning_rate = cfg.get_double("learning_rate", c.learning_rate);
    c.noise_exponent = cfg.get_double("noise_exponent", c.noise_exponent);
    c.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(c.seed)));
    c.threads = static_cast<int>(cfg.get_int("threads", c.threads));
    // Echoed by to_config; accepted back only when it agrees with threads.
    if (cfg.has("reproducible") && cfg.get_bool("reproducible", true) != (c.threads == 1)) {
        throw ConfigError("reproducible=true requires threads=1");
    }
    c.validate();
    return c;
}

Config SkipGramConfig::to_config() const {
    Config cfg;
    cfg.set("dim", std::to_string(dim));
    cfg.set("window", std::to_string(window));
    cfg.set("negatives", std::to_string(negatives));
    cfg.set("epochs", std::to_string(epochs));
    cfg.set("learning_rate", format_double(learning_rate));
    cfg.set("noise_exponent", format_double(noise_exponent));
    cfg.set("seed", std::to_string(seed));
    cfg.set("threads", std::to_string(threads));
    cfg.set("reproducible", threads == 1 ? "true" : "false");
    return cfg;
}

EmbeddingTable::EmbeddingTable(std::size_t num_nodes, int dim)
    : num_nodes_(num_nodes), dim_(dim), input_(num_nodes * static_cast<std::size_t>(dim), 0.0),
      output_(num_nodes * static_cast<std::size_t>(dim), 0.0) {
    if (dim <= 0) throw std::invalid_argument("embedding dim must be positive");
}

std::span<double> EmbeddingTable::input(NodeId v) {
    if (v >= num_nodes_) throw std::out_of_range("embedding row " + std::to_string(v));
    return {input_.data() + static_cast<std::size_t>(v) * dim_, static_cast<std::size_t>(dim_)};
}
std::span<const double> EmbeddingTable::input(NodeId v) const {
    if (v >= num_nodes_) throw std::out_of_range("embedding row " + std::to_string(v));
    return {input_.data() + static_cast<std::size_t>(v) * dim_, static_cast<std::size_t>(dim_)};
}
std::span<double> EmbeddingTable::output(NodeId v) {
    if (v >= num_nodes_) throw std::out_of_range("embedding row " + std::to_string(v));
    return {output_.data() + static_cast<std::size_t>(v) * dim_, static_cast<std::size_t>(dim_)};
}
std::span<const double> EmbeddingTable::output(NodeId v) const {
    if (v >= num_nodes_) throw std::out_of_range("embedding row " + std::to_string(v));
    return {output_.data() + static_cast<std::size_t>(v) * dim_, static_cast<std::size_t>(dim_)};
}

double softmax_prob(const EmbeddingTable& table, NodeId u, NodeId n) {
    auto fu = table.input(u);
    std::vector<double> dots(table.size());
    for (std::size_t v = 0; v < table.size(); ++v) dots[v] = dot(table.input(static_cast<NodeId>(v)), fu);
    double mx = *std::max_element(dots.begin(), dots.end());
    double denom = 0.0;
    for (double d : dots) denom += std::exp(d - mx);
    return std::exp(dots.at(n) - mx) / denom;
}

SgnsGradients sgns_loss_and_grads(const EmbeddingTable& table, NodeId center, NodeId context,
                                  std::span<const NodeId> negatives) {
    const auto dim = static_cast<std::size_t>(table.dim());
    auto c = table.input(center);
    SgnsGradients out;
    out.center.assign(dim, 0.0);

    auto term = [&](NodeId target, double label, std::vector<double>& grad_out) {
        auto o = table.output(target);
        double d = dot(c, o);
        out.loss += label > 0 ? neg_log_sigmoid(d) : neg_log_sigmoid(-d);
        double g = sigmoid(d) - label;
        grad_out.assign(dim, 0.0);
        for (std::size_t k = 0; k < dim; ++k) {
            out.center[k] += g * o[k];
            grad_out[k] = g * c[k];
        }
    };
    term(context, 1.0, out.context);
    out.negatives.resize(negatives.size());
    for (std::size_t i = 0; i < negatives.size(); ++i) {
        if (negatives[i] == context) throw std::invalid_argument("negative sample equals the context node");
        term(negatives[i], 0.0, out.negatives[i]);
    }
    return out;
}

std::vector<std::pair<NodeId, NodeId>> training_pairs(const std::vector<std::vector<NodeId>>& walks, int window) {
    std::vector<std::pair<NodeId, NodeId>> pairs;
    const auto w = static_cast<std::ptrdiff_t>(window);
    for (const auto& walk : walks) {
        const auto len = static_cast<std::ptrdiff_t>(walk.size());
        for (std::ptrdiff_t i = 0; i < len; ++i) {
            for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - w); j <= std::min(len - 1, i + w); ++j) {
                if (j != i) pairs.emplace_back(walk[i], walk[j]);
            }
        }
    }
    return pairs;
}

SkipGramResult train_embeddings(const std::vector<std::vector<NodeId>>& walks, std::size_t num_nodes,
                                const SkipGramConfig& config) {
    config.validate();
    if (walks.empty()) throw DataError("cannot train embeddings on an empty corpus");
    for (const auto& w : walks)
        for (auto v : w)
            if (v >= num_nodes) throw std::out_of_range("walk node " + std::to_string(v) + " outside embedding table");

    SkipGramResult result{EmbeddingTable(num_nodes, config.dim), {}};
    auto& table = result.table;
    {
        auto rng = make_rng(config.seed, {0xe111});
        const double bound = 0.5 / config.dim;
        std::uniform_real_distribution<double> init(-bound, bound);
        for (auto& x : table.input_data()) x = init(rng);
        for (auto& x : table.output_data()) x = init(rng);
    }

    NoiseSampler noise(walks, num_nodes, config.noise_exponent);
    const auto window = static_cast<std::ptrdiff_t>(config.window);

    std::size_t pairs_per_epoch = 0;
    for (const auto& walk : walks) {
        const auto len = static_cast<std::ptrdiff_t>(walk.size());
        for (std::ptrdiff_t i = 0; i < len; ++i)
            pairs_per_epoch += static_cast<std::size_t>(std::min(len - 1, i + window) - std::max<std::ptrdiff_t>(0, i - window));
    }
    if (pairs_per_epoch == 0) return result;
    const double total_pairs = static_cast<double>(pairs_per_epoch) * config.epochs;

    // Walks [begin, end) for one epoch; returns summed loss.
    auto run_range = [&]<class Access>(Access, std::size_t begin, std::size_t end, std::size_t done_before, int epoch,
                                       std::uint64_t shard) {
        auto rng = make_rng(config.seed, {0x5e6, static_cast<std::uint64_t>(epoch), shard});
        std::vector<double> grad(static_cast<std::size_t>(config.dim));
        double loss = 0.0;
        std::size_t done = done_before;
        for (std::size_t wi = begin; wi < end; ++wi) {
            const auto& walk = walks[wi];
            const auto len = static_cast<std::ptrdiff_t>(walk.size());
            for (std::ptrdiff_t i = 0; i < len; ++i) {
                for (std::ptrdiff_t j = std::max<std::ptrdiff_t>(0, i - window); j <= std::min(len - 1, i + window); ++j) {
                    if (j == i) continue;
                    double lr = config.learning_rate * std::max(1.0 - static_cast<double>(done) / total_pairs, 1e-4);
                    loss += sgd_pair<Access>(table, walk[i], walk[j], noise, config.negatives, lr, rng, grad);
                    ++done;
                }
            }
        }
        return loss;
    };

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const std::size_t done_before = static_cast<std::size_t>(epoch) * pairs_per_epoch;
        double loss = 0.0;
        if (config.threads == 1) {
            loss = run_range(PlainAccess{}, 0, walks.size(), done_before, epoch, 0);
        } else {
            const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.threads), walks.size());
            const std::size_t chunk = (walks.size() + workers - 1) / workers;
            std::vector<double> partial(workers, 0.0);
            std::vector<std::thread> pool;
            for (std::size_t w = 0; w < workers; ++w) {
                std::size_t b = w * chunk;
                std::size_t e = std::min(walks.size(), b + chunk);
                if (b >= e) continue;
                // Each shard decays its rate as if it owned its share of the epoch.
                std::size_t offset = done_before + (pairs_per_epoch * w) / workers;
                pool.emplace_back([&, b, e, w, offset] {
                    partial[w] = run_range(RelaxedAccess{}, b, e, offset, epoch, w);
                });
            }
            for (auto& th : pool) th.join();
            for (double p : partial) loss += p;
        }
        result.epoch_losses.push_back(loss / static_cast<double>(pairs_per_epoch));
    }
    return result;
}

EdgeOp parse_edge_op(std::string_view name) {
    if (name == "hadamard") return EdgeOp::hadamard;
    if (name == "average") return EdgeOp::average;
    if (name == "l1") return EdgeOp::l1;
    if (name == "l2") return EdgeOp::l2;
    throw ConfigError("unknown edge operator '" + std::string(name) + "' (hadamard, average, l1, l2)");
}

std::string_view edge_op_name(EdgeOp op) {
    switch (op) {
    case EdgeOp::hadamard: return "hadamard";
    case EdgeOp::average: return "average";
    case EdgeOp::l1: return "l1";
    case EdgeOp::l2: return "l2";
    }
    return "?";
}

std::vector<double> embed_edge(std::span<const double> a, std::span<const double> b, EdgeOp op) {
    if (a.size() != b.size()) throw DimensionMismatch("edge endpoints have different embedding sizes");
    std::vector<double> out(a.size());
    for (std::size_t k = 0; k < a.size(); ++k) {
        switch (op) {
        case EdgeOp::hadamard: out[k] = a[k] * b[k]; break;
        case EdgeOp::average: out[k] = 0.5 * (a[k] + b[k]); break;
        case EdgeOp::l1: out[k] = std::abs(a[k] - b[k]); break;
        case EdgeOp::l2: out[k] = (a[k] - b[k]) * (a[k] - b[k]); break;
        }
    }
    return out;
}

std::vector<double> embed_edge(const EmbeddingTable& table, NodeId a, NodeId b, EdgeOp op) {
    return embed_edge(table.input(a), table.input(b), op);
}

void write_embeddings(std::ostream& out, const EmbeddingTable& table, const Config& header) {
    for (const auto& [k, v] : header.values()) out << "# " << k << '=' << v << '\n';
    out << "# num_nodes=" << table.size() << '\n';
    for (std::size_t v = 0; v < table.size(); ++v) {
        out << v;
        for (double x : table.input(static_cast<NodeId>(v))) out << ' ' << format_double(x);
        out << '\n';
    }
}

void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table, const Config& header) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_embeddings(out, table, header);
}

LoadedEmbeddings read_embeddings(std::istream& in) {
    LoadedEmbeddings loaded;
    std::string line;
    std::size_t lineno = 0;
    std::size_t dim = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line.rfind("# ", 0) == 0) {
            auto eq = line.find('=');
            if (eq == std::string::npos) throw RowError(lineno, "header line without '='");
            loaded.header.set(line.substr(2, eq - 2), line.substr(eq + 1));
            continue;
        }
        std::istringstream fields(line);
        std::string tok;
        fields >> tok;
        long long id = 0;
        if (!parse_int(tok, id) || id != static_cast<long long>(loaded.vectors.size())) {
            throw RowError(lineno, "expected node id " + std::to_string(loaded.vectors.size()));
        }
        std::vector<double> vec;
        while (fields >> tok) {
            double x = 0.0;
            if (!parse_double(tok, x)) throw RowError(lineno, "bad number '" + tok + "'");
            vec.push_back(x);
        }
        if (loaded.vectors.empty()) dim = vec.size();
        if (vec.size() != dim || dim == 0) throw RowError(lineno, "inconsistent embedding dimension");
        loaded.vectors.push_back(std::move(vec));
    }
    return loaded;
}

LoadedEmbeddings load_embeddings(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return read_embeddings(in);
}

double cosine(std::span<const double> a, std::span<const double> b) {
    double na = std::sqrt(dot(a, a));
    double nb = std::sqrt(dot(b, b));
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

} // namespace hetlink
