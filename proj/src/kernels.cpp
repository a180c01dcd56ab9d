#include "hetlink/kernels.hpp"

#include "hetlink/errors.hpp"
#include "hetlink/rng.hpp"
#include "hetlink/text.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <ostream>
#include <thread>

namespace hetlink {
namespace {

std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::map<std::string, double> label_histogram(const HeteroGraph& g) {
    std::map<std::string, double> hist;
    for (NodeId v = 0; v < g.node_count(); ++v) hist[g.label_name(v)] += 1.0;
    return hist;
}

template <class Key>
double sparse_dot(const std::map<Key, double>& a, const std::map<Key, double>& b) {
    double s = 0.0;
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (ia->first < ib->first) {
            ++ia;
        } else if (ib->first < ia->first) {
            ++ib;
        } else {
            s += ia->second * ib->second;
            ++ia;
            ++ib;
        }
    }
    return s;
}

// Runs fn(i) for i in [0, n) over `threads` workers; each index is written by one worker only.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(threads, 1)), std::max<std::size_t>(n, 1));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += workers) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// Per-graph precomputation so each Gram entry is cheap.
class KernelEvaluator {
public:
    KernelEvaluator(std::span<const HeteroGraph> graphs, const KernelConfig& config) : graphs_(graphs), config_(config) {
        if (config.kind == KernelKind::vertex_label_histogram) {
            for (const auto& g : graphs) hist_.push_back(label_histogram(g));
        } else if (config.kind == KernelKind::propagation) {
            prop_.resize(graphs.size());
            parallel_for(graphs.size(), config.threads,
                         [&](std::size_t i) { prop_[i] = propagation_features(graphs[i], config); });
        }
    }

    double operator()(const KernelEvaluator& other, std::size_t i, std::size_t j) const {
        switch (config_.kind) {
        case KernelKind::node_pairs_rbf: return node_pairs_kernel(graphs_[i], other.graphs_[j], config_.rbf_sigma);
        case KernelKind::vertex_label_histogram: return sparse_dot(hist_[i], other.hist_[j]);
        case KernelKind::propagation: return propagation_dot(prop_[i], other.prop_[j]);
        }
        return 0.0;
    }

private:
    std::span<const HeteroGraph> graphs_;
    const KernelConfig& config_;
    std::vector<std::map<std::string, double>> hist_;
    std::vector<PropagationFeatures> prop_;
};

double evaluate_pair(const KernelEvaluator& a, const KernelEvaluator& b, std::size_t i, std::size_t j,
                     const std::string& row_id, const std::string& col_id) {
    try {
        return a(b, i, j);
    } catch (const std::exception& e) {
        throw DataError("kernel(" + row_id + ", " + col_id + "): " + e.what());
    }
}

double cosine_normalize(double k, double kgg, double khh) {
    double denom = std::sqrt(kgg * khh);
    return denom > 0.0 ? k / denom : 0.0;
}

} // namespace

KernelKind parse_kernel_kind(std::string_view name) {
    if (name == "node_pairs_rbf") return KernelKind::node_pairs_rbf;
    if (name == "vertex_label_histogram") return KernelKind::vertex_label_histogram;
    if (name == "propagation") return KernelKind::propagation;
    throw ConfigError("unknown kernel '" + std::string(name) +
                      "' (node_pairs_rbf, vertex_label_histogram, propagation)");
}

std::string_view kernel_kind_name(KernelKind kind) {
    switch (kind) {
    case KernelKind::node_pairs_rbf: return "node_pairs_rbf";
    case KernelKind::vertex_label_histogram: return "vertex_label_histogram";
    case KernelKind::propagation: return "propagation";
    }
    return "?";
}

void KernelConfig::validate() const {
    if (!(rbf_sigma > 0.0)) throw ConfigError("rbf_sigma must be positive");
    if (iterations < 1) throw ConfigError("propagation iterations must be >= 1");
    if (!(bin_width > 0.0)) throw ConfigError("propagation bin_width must be positive");
    if (projections < 1) throw ConfigError("propagation projections must be >= 1");
    if (threads < 1) throw ConfigError("kernel threads must be >= 1");
}

KernelConfig KernelConfig::from_config(const Config& cfg) {
    KernelConfig c;
    if (cfg.has("kernel")) c.kind = parse_kernel_kind(cfg.get_string("kernel", ""));
    c.rbf_sigma = cfg.get_double("rbf_sigma", c.rbf_sigma);
    c.iterations = static_cast<int>(cfg.get_int("iterations", c.iterations));
    c.bin_width = cfg.get_double("bin_width", c.bin_width);
    c.projections = static_cast<int>(cfg.get_int("projections", c.projections));
    c.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(c.seed)));
    c.normalize = cfg.get_bool("normalize", c.normalize);
    c.threads = static_cast<int>(cfg.get_int("threads", c.threads));
    c.validate();
    return c;
}

Config KernelConfig::to_config() const {
    Config cfg;
    cfg.set("kernel", std::string(kernel_kind_name(kind)));
    cfg.set("rbf_sigma", format_double(rbf_sigma));
    cfg.set("iterations", std::to_string(iterations));
    cfg.set("bin_width", format_double(bin_width));
    cfg.set("projections", std::to_string(projections));
    cfg.set("seed", std::to_string(seed));
    cfg.set("normalize", normalize ? "true" : "false");
    cfg.set("threads", std::to_string(threads));
    return cfg;
}

double rbf(std::span<const double> x, std::span<const double> y, double sigma) {
    if (x.size() != y.size()) throw DimensionMismatch("rbf: vectors differ in size");
    if (!(sigma > 0.0)) throw std::invalid_argument("rbf: sigma must be positive");
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - y[i]) * (x[i] - y[i]);
    return std::exp(-d2 / (2.0 * sigma * sigma));
}

double node_pairs_kernel(const HeteroGraph& g, const HeteroGraph& h, double sigma) {
    auto check = [](const HeteroGraph& graph) {
        for (NodeId v = 0; v < graph.node_count(); ++v)
            if (!graph.node(v).attrs) throw DataError("node " + std::to_string(v) + " has no attributes");
    };
    check(g);
    check(h);
    double total = 0.0;
    for (const auto& a : g.nodes())
        for (const auto& b : h.nodes()) total += rbf(*a.attrs, *b.attrs, sigma);
    return total;
}

double vertex_label_histogram_kernel(const HeteroGraph& g, const HeteroGraph& h) {
    return sparse_dot(label_histogram(g), label_histogram(h));
}

PropagationFeatures propagation_features(const HeteroGraph& g, const KernelConfig& config) {
    config.validate();
    const auto n = g.node_count();

    std::vector<std::string> names;
    for (NodeId v = 0; v < n; ++v) names.push_back(g.label_name(v));
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    const auto L = names.size();

    std::vector<std::vector<double>> state(n, std::vector<double>(L, 0.0));
    for (NodeId v = 0; v < n; ++v) {
        auto pos = std::lower_bound(names.begin(), names.end(), g.label_name(v)) - names.begin();
        state[v][static_cast<std::size_t>(pos)] = 1.0;
    }

    PropagationFeatures out;
    std::vector<std::vector<double>> next(n);
    std::vector<std::vector<double>> incoming;
    for (int t = 0; t <= config.iterations; ++t) {
        if (t > 0) {
            for (NodeId v = 0; v < n; ++v) {
                auto adj = g.adjacency(v);
                if (adj.empty()) {
                    next[v] = state[v];
                    continue;
                }
                // Sum in a canonical order so relabelled isomorphic graphs agree bit for bit.
                incoming.clear();
                for (const auto& a : adj) incoming.push_back(state[a.node]);
                std::sort(incoming.begin(), incoming.end());
                next[v].assign(L, 0.0);
                for (const auto& s : incoming)
                    for (std::size_t l = 0; l < L; ++l) next[v][l] += s[l];
                for (auto& x : next[v]) x /= static_cast<double>(incoming.size());
            }
            std::swap(state, next);
        }

        const auto P = static_cast<std::size_t>(config.projections);
        std::vector<std::vector<double>> dirs(P, std::vector<double>(L));
        std::vector<double> offsets(P);
        for (std::size_t j = 0; j < P; ++j) {
            for (std::size_t l = 0; l < L; ++l) {
                auto rng = make_rng(config.seed, {static_cast<std::uint64_t>(t), j, fnv1a(names[l])});
                dirs[j][l] = std::normal_distribution<double>(0.0, 1.0)(rng);
            }
            auto rng = make_rng(config.seed, {static_cast<std::uint64_t>(t), j, 0xb1a5});
            offsets[j] = uniform01(rng);
        }

        std::map<std::vector<std::int64_t>, double> hist;
        std::vector<std::int64_t> key(P);
        for (NodeId v = 0; v < n; ++v) {
            for (std::size_t j = 0; j < P; ++j) {
                double proj = 0.0;
                for (std::size_t l = 0; l < L; ++l) proj += state[v][l] * dirs[j][l];
                key[j] = static_cast<std::int64_t>(std::floor(proj / config.bin_width + offsets[j]));
            }
            hist[key] += 1.0;
        }
        out.histograms.push_back(std::move(hist));
    }
    return out;
}

double propagation_dot(const PropagationFeatures& a, const PropagationFeatures& b) {
    if (a.histograms.size() != b.histograms.size()) {
        throw std::invalid_argument("propagation features built with different iteration counts");
    }
    double s = 0.0;
    for (std::size_t t = 0; t < a.histograms.size(); ++t) s += sparse_dot(a.histograms[t], b.histograms[t]);
    return s;
}

double propagation_kernel(const HeteroGraph& g, const HeteroGraph& h, const KernelConfig& config) {
    return propagation_dot(propagation_features(g, config), propagation_features(h, config));
}

HeteroGraph with_label_attributes(const HeteroGraph& g, const std::vector<std::string>& alphabet) {
    HeteroGraph out;
    for (const auto& node : g.nodes()) {
        const auto& label = g.node_labels().name(node.label);
        std::vector<double> onehot(alphabet.size(), 0.0);
        auto it = std::find(alphabet.begin(), alphabet.end(), label);
        if (it != alphabet.end()) onehot[static_cast<std::size_t>(it - alphabet.begin())] = 1.0;
        out.add_node(label, std::move(onehot), node.name);
    }
    for (const auto& e : g.edges()) out.add_edge(e.u, e.v, g.edge_labels().name(e.label), e.weight);
    out.freeze();
    return out;
}

std::vector<std::string> label_union(std::span<const HeteroGraph> graphs) {
    std::vector<std::string> names;
    for (const auto& g : graphs)
        for (const auto& name : g.node_labels().names()) names.push_back(name);
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    return names;
}

GramMatrix gram_matrix(std::span<const HeteroGraph> graphs, std::span<const std::string> ids,
                       const KernelConfig& config) {
    config.validate();
    if (graphs.size() != ids.size()) throw std::invalid_argument("gram_matrix: one id per graph required");
    KernelEvaluator eval(graphs, config);
    const auto n = graphs.size();
    GramMatrix gram;
    gram.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    gram.row_ids.assign(ids.begin(), ids.end());
    gram.col_ids = gram.row_ids;
    parallel_for(n, config.threads, [&](std::size_t i) {
        for (std::size_t j = i; j < n; ++j) {
            gram.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                evaluate_pair(eval, eval, i, j, ids[i], ids[j]);
        }
    });
    for (Eigen::Index i = 0; i < gram.values.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j) gram.values(i, j) = gram.values(j, i);

    if (config.normalize) {
        Eigen::VectorXd diag = gram.values.diagonal();
        for (Eigen::Index i = 0; i < gram.values.rows(); ++i)
            for (Eigen::Index j = 0; j < gram.values.cols(); ++j)
                gram.values(i, j) = cosine_normalize(gram.values(i, j), diag[i], diag[j]);
        gram.normalized = true;
    }
    return gram;
}

GramMatrix gram_matrix(std::span<const HeteroGraph> rows, std::span<const std::string> row_ids,
                       std::span<const HeteroGraph> cols, std::span<const std::string> col_ids,
                       const KernelConfig& config) {
    config.validate();
    if (rows.size() != row_ids.size() || cols.size() != col_ids.size()) {
        throw std::invalid_argument("gram_matrix: one id per graph required");
    }
    KernelEvaluator er(rows, config);
    KernelEvaluator ec(cols, config);
    GramMatrix gram;
    gram.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
    gram.row_ids.assign(row_ids.begin(), row_ids.end());
    gram.col_ids.assign(col_ids.begin(), col_ids.end());
    std::vector<double> self_rows(rows.size()), self_cols(cols.size());
    parallel_for(rows.size(), config.threads, [&](std::size_t i) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            gram.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                evaluate_pair(er, ec, i, j, row_ids[i], col_ids[j]);
        }
        if (config.normalize) self_rows[i] = evaluate_pair(er, er, i, i, row_ids[i], row_ids[i]);
    });
    if (config.normalize) {
        for (std::size_t j = 0; j < cols.size(); ++j) self_cols[j] = evaluate_pair(ec, ec, j, j, col_ids[j], col_ids[j]);
        for (Eigen::Index i = 0; i < gram.values.rows(); ++i)
            for (Eigen::Index j = 0; j < gram.values.cols(); ++j)
                gram.values(i, j) = cosine_normalize(gram.values(i, j), self_rows[static_cast<std::size_t>(i)],
                                                     self_cols[static_cast<std::size_t>(j)]);
        gram.normalized = true;
    }
    return gram;
}

PsdResult psd_check(const Eigen::MatrixXd& m, double tol) {
    if (m.rows() != m.cols()) throw std::invalid_argument("psd_check: matrix is not square");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j)
            if (std::abs(m(i, j) - m(j, i)) > tol * scale) {
                throw std::invalid_argument("psd_check: matrix is not symmetric at (" + std::to_string(i) + ", " +
                                            std::to_string(j) + ")");
            }
    PsdResult result;
    if (m.rows() == 0) {
        result.psd = true;
        return result;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m, Eigen::EigenvaluesOnly);
    result.min_eigenvalue = solver.eigenvalues().minCoeff();
    result.psd = result.min_eigenvalue >= -tol * std::abs(m.trace());
    return result;
}

void write_gram_tsv(std::ostream& out, const GramMatrix& gram) {
    out << "id";
    for (const auto& c : gram.col_ids) out << '\t' << c;
    out << '\n';
    for (Eigen::Index i = 0; i < gram.values.rows(); ++i) {
        out << gram.row_ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < gram.values.cols(); ++j) out << '\t' << format_double(gram.values(i, j));
        out << '\n';
    }
}

} // namespace hetlink
