#include "hetlink/sage.hpp"

#include "hetlink/errors.hpp"
#include "hetlink/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

namespace hetlink {
namespace {

constexpr const char* kCheckpointMagic = "hetlink-sage-checkpoint 1";

std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
    std::vector<int> out;
    for (const auto& part : split(text, ',')) {
        long long v = 0;
        if (!parse_int(trim(part), v)) throw ConfigError("bad integer list for " + key + ": '" + text + "'");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

std::string int_list(const std::vector<int>& xs) {
    std::vector<std::string> parts;
    for (int x : xs) parts.push_back(std::to_string(x));
    return join(parts, ",");
}

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

struct TreeEntry {
    NodeId node;
    int level;
    std::vector<std::vector<int>> children; // per local relation
};

// One sampled computation tree with everything backprop needs.
struct Tape {
    std::vector<TreeEntry> entries;
    std::vector<std::vector<Eigen::VectorXd>> h;                             // [layer][entry]
    std::vector<std::vector<std::vector<Eigen::VectorXd>>> x;                // [layer][entry][rel]
    std::vector<std::vector<Eigen::VectorXd>> z;                             // [layer][entry]
    std::vector<std::vector<double>> norm;                                   // [layer][entry]
    std::vector<std::vector<std::vector<std::vector<Eigen::VectorXd>>>> mask; // [layer][entry][rel][child]
};

std::vector<NodeId> sample_neighbors(const std::vector<NodeId>& all, int fanout, Rng& rng) {
    if (fanout <= 0 || all.size() <= static_cast<std::size_t>(fanout)) return all;
    std::vector<NodeId> pool = all;
    for (std::size_t i = 0; i < static_cast<std::size_t>(fanout); ++i) {
        auto j = i + uniform_index(rng, pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(fanout));
    return pool;
}

Tape build_tree(const SageContext& ctx, const SageModel& model, NodeId target, Rng& rng) {
    const int depth = model.config().depth();
    Tape tape;
    tape.entries.push_back({target, 0, {}});
    for (std::size_t e = 0; e < tape.entries.size(); ++e) {
        if (tape.entries[e].level >= depth) continue;
        const NodeId v = tape.entries[e].node;
        const int level = tape.entries[e].level;
        const auto& rels = ctx.relations_of(v);
        std::vector<std::vector<int>> children(rels.size());
        for (std::size_t k = 0; k < rels.size(); ++k) {
            for (auto u : sample_neighbors(ctx.neighbors(v, k), model.config().fanouts[level], rng)) {
                children[k].push_back(static_cast<int>(tape.entries.size()));
                tape.entries.push_back({u, level + 1, {}});
            }
        }
        tape.entries[e].children = std::move(children);
    }
    return tape;
}

Eigen::VectorXd attributes(const SageContext& ctx, const SageModel& model, NodeId v) {
    const auto& node = ctx.graph().node(v);
    const auto& label = ctx.graph().label_name(v);
    if (!node.attrs) throw DataError("node " + std::to_string(v) + " (" + label + ") has no attributes");
    if (static_cast<int>(node.attrs->size()) != model.input_dim(label)) {
        throw DimensionMismatch("node " + std::to_string(v) + " attribute size " + std::to_string(node.attrs->size()) +
                                " differs from model input size for '" + label + "'");
    }
    return Eigen::Map<const Eigen::VectorXd>(node.attrs->data(), static_cast<Eigen::Index>(node.attrs->size()));
}

void run_forward(const SageContext& ctx, const SageModel& model, Tape& tape, SageMode mode, Rng& rng) {
    const int depth = model.config().depth();
    const double p = mode == SageMode::train ? model.config().dropout : 0.0;
    const auto n = tape.entries.size();
    tape.h.assign(static_cast<std::size_t>(depth) + 1, std::vector<Eigen::VectorXd>(n));
    tape.x.assign(static_cast<std::size_t>(depth) + 1, std::vector<std::vector<Eigen::VectorXd>>(n));
    tape.z.assign(static_cast<std::size_t>(depth) + 1, std::vector<Eigen::VectorXd>(n));
    tape.norm.assign(static_cast<std::size_t>(depth) + 1, std::vector<double>(n, 0.0));
    tape.mask.assign(static_cast<std::size_t>(depth) + 1, std::vector<std::vector<std::vector<Eigen::VectorXd>>>(n));

    for (std::size_t e = 0; e < n; ++e) tape.h[0][e] = attributes(ctx, model, tape.entries[e].node);

    std::bernoulli_distribution keep(1.0 - p);
    for (int i = 1; i <= depth; ++i) {
        for (std::size_t e = 0; e < n; ++e) {
            const auto& entry = tape.entries[e];
            if (entry.level > depth - i) continue;
            const auto& rels = ctx.relations_of(entry.node);
            if (rels.empty()) {
                throw DataError("label '" + ctx.graph().label_name(entry.node) + "' receives no relations in the model");
            }
            const Eigen::VectorXd& self = tape.h[i - 1][e];
            Eigen::VectorXd z = Eigen::VectorXd::Zero(model.config().layer_dims[i - 1]);
            tape.x[i][e].resize(rels.size());
            tape.mask[i][e].resize(rels.size());
            for (std::size_t k = 0; k < rels.size(); ++k) {
                const auto& W = model.weight(i - 1, rels[k]);
                const auto nbr_dim = W.cols() - self.size();
                Eigen::VectorXd agg = Eigen::VectorXd::Zero(nbr_dim);
                const auto& kids = entry.children[k];
                for (int c : kids) {
                    const auto& hc = tape.h[i - 1][static_cast<std::size_t>(c)];
                    if (p > 0.0) {
                        Eigen::VectorXd m(hc.size());
                        for (Eigen::Index d = 0; d < m.size(); ++d) m[d] = keep(rng) ? 1.0 / (1.0 - p) : 0.0;
                        agg += m.cwiseProduct(hc);
                        tape.mask[i][e][k].push_back(std::move(m));
                    } else {
                        agg += hc;
                    }
                }
                if (!kids.empty()) agg /= static_cast<double>(kids.size());
                Eigen::VectorXd xk(self.size() + nbr_dim);
                xk << self, agg;
                z.noalias() += W * xk;
                tape.x[i][e][k] = std::move(xk);
            }
            z /= static_cast<double>(rels.size());
            Eigen::VectorXd a = z.cwiseMax(0.0);
            double nrm = a.norm();
            tape.norm[i][e] = nrm;
            tape.h[i][e] = nrm > 0.0 ? Eigen::VectorXd(a / nrm) : Eigen::VectorXd::Zero(a.size());
            tape.z[i][e] = std::move(z);
        }
    }
}

void run_backward(const SageContext& ctx, const SageModel& model, const Tape& tape, const Eigen::VectorXd& grad_out,
                  std::vector<Eigen::MatrixXd>& grads) {
    const int depth = model.config().depth();
    const auto n = tape.entries.size();
    const auto R = static_cast<int>(model.relations().size());
    std::vector<std::vector<Eigen::VectorXd>> dh(static_cast<std::size_t>(depth) + 1, std::vector<Eigen::VectorXd>(n));
    dh[static_cast<std::size_t>(depth)][0] = grad_out;

    for (int i = depth; i >= 1; --i) {
        for (std::size_t e = 0; e < n; ++e) {
            const auto& entry = tape.entries[e];
            if (entry.level > depth - i || dh[i][e].size() == 0) continue;
            const double nrm = tape.norm[i][e];
            if (nrm == 0.0) continue;
            const auto& h = tape.h[i][e];
            const auto& g = dh[i][e];
            Eigen::VectorXd da = (g - h * h.dot(g)) / nrm;
            const auto& rels = ctx.relations_of(entry.node);
            Eigen::VectorXd dz = (tape.z[i][e].array() > 0.0).select(da, 0.0) / static_cast<double>(rels.size());
            const auto self_dim = tape.h[i - 1][e].size();
            for (std::size_t k = 0; k < rels.size(); ++k) {
                const auto idx = static_cast<std::size_t>((i - 1) * R + rels[k]);
                const auto& W = model.weight(i - 1, rels[k]);
                grads[idx].noalias() += dz * tape.x[i][e][k].transpose();
                Eigen::VectorXd dx = W.transpose() * dz;
                auto& dself = dh[i - 1][e];
                if (dself.size() == 0) dself = Eigen::VectorXd::Zero(self_dim);
                dself += dx.head(self_dim);
                const auto& kids = entry.children[k];
                if (kids.empty()) continue;
                Eigen::VectorXd dagg = dx.tail(dx.size() - self_dim) / static_cast<double>(kids.size());
                const auto& masks = tape.mask[i][e][k];
                for (std::size_t j = 0; j < kids.size(); ++j) {
                    auto& dc = dh[i - 1][static_cast<std::size_t>(kids[j])];
                    if (dc.size() == 0) dc = Eigen::VectorXd::Zero(dagg.size());
                    if (masks.empty()) {
                        dc += dagg;
                    } else {
                        dc += masks[j].cwiseProduct(dagg);
                    }
                }
            }
        }
    }
}

Eigen::VectorXd forward_one(const SageContext& ctx, const SageModel& model, NodeId v, SageMode mode, Rng& rng,
                            Tape* keep) {
    Tape tape;
    if (mode == SageMode::eval) {
        auto local = make_rng(model.config().seed, {0xe7a1, v});
        tape = build_tree(ctx, model, v, local);
        run_forward(ctx, model, tape, mode, local);
    } else {
        tape = build_tree(ctx, model, v, rng);
        run_forward(ctx, model, tape, mode, rng);
    }
    Eigen::VectorXd out = tape.h[static_cast<std::size_t>(model.config().depth())][0];
    if (keep) *keep = std::move(tape);
    return out;
}

} // namespace

void SageConfig::validate() const {
    if (layer_dims.empty()) throw ConfigError("sage layer_dims must not be empty");
    for (int d : layer_dims)
        if (d <= 0) throw ConfigError("sage layer_dims must be positive");
    if (fanouts.size() != layer_dims.size()) throw ConfigError("sage fanouts must have one entry per layer");
    for (int f : fanouts)
        if (f < 0) throw ConfigError("sage fanouts must be >= 0");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("sage dropout must lie in [0,1)");
    if (epochs < 0 || batch_size <= 0) throw ConfigError("sage epochs must be >= 0 and batch_size positive");
    if (!(learning_rate > 0.0)) throw ConfigError("sage learning_rate must be positive");
}

SageConfig SageConfig::from_config(const Config& cfg) {
    SageConfig c;
    if (cfg.has("layer_dims")) c.layer_dims = parse_int_list("layer_dims", cfg.get_string("layer_dims", ""));
    if (cfg.has("fanouts")) c.fanouts = parse_int_list("fanouts", cfg.get_string("fanouts", ""));
    c.dropout = cfg.get_double("dropout", c.dropout);
    c.epochs = static_cast<int>(cfg.get_int("epochs", c.epochs));
    c.batch_size = static_cast<int>(cfg.get_int("batch_size", c.batch_size));
    c.learning_rate = cfg.get_double("learning_rate", c.learning_rate);
    c.seed = static_cast<std::uint64_t>(cfg.get_int("seed", static_cast<long long>(c.seed)));
    c.nonzero_edges_only = cfg.get_bool("nonzero_edges_only", c.nonzero_edges_only);
    c.validate();
    return c;
}

Config SageConfig::to_config() const {
    Config cfg;
    cfg.set("layer_dims", int_list(layer_dims));
    cfg.set("fanouts", int_list(fanouts));
    cfg.set("dropout", format_double(dropout));
    cfg.set("epochs", std::to_string(epochs));
    cfg.set("batch_size", std::to_string(batch_size));
    cfg.set("learning_rate", format_double(learning_rate));
    cfg.set("seed", std::to_string(seed));
    cfg.set("nonzero_edges_only", nonzero_edges_only ? "true" : "false");
    return cfg;
}

SageModel::SageModel(const HeteroGraph& graph, SageConfig config) : config_(std::move(config)) {
    config_.validate();
    std::set<std::pair<std::string, std::string>> rels;
    for (const auto& e : graph.edges()) {
        const auto& a = graph.label_name(e.u);
        const auto& b = graph.label_name(e.v);
        rels.emplace(a, b);
        rels.emplace(b, a);
    }
    if (rels.empty()) throw DataError("graph has no edges to define relations");
    std::set<std::string> labels;
    for (const auto& [nbr, node] : rels) {
        relations_.push_back({nbr, node});
        labels.insert(nbr);
        labels.insert(node);
    }
    for (const auto& label : labels) {
        auto id = graph.node_labels().find(label);
        auto dim = graph.attribute_dim(*id);
        if (!dim) throw DataError("nodes labelled '" + label + "' carry no attributes");
        input_dims_.push_back({label, static_cast<int>(*dim)});
    }

    auto rng = make_rng(config_.seed, {0x5a9e});
    auto glorot = [&rng](Eigen::Index rows, Eigen::Index cols) {
        double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
        std::uniform_real_distribution<double> u(-limit, limit);
        Eigen::MatrixXd m(rows, cols);
        for (Eigen::Index c = 0; c < cols; ++c)
            for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = u(rng);
        return m;
    };
    for (int i = 0; i < config_.depth(); ++i) {
        for (const auto& rel : relations_) {
            int self = i == 0 ? input_dim(rel.node_label) : config_.layer_dims[i - 1];
            int nbr = i == 0 ? input_dim(rel.neighbor_label) : config_.layer_dims[i - 1];
            params_.push_back(glorot(config_.layer_dims[i], self + nbr));
        }
    }
    params_.push_back(glorot(out_dim(), 1));
    params_.push_back(Eigen::MatrixXd::Zero(1, 1));
}

int SageModel::input_dim(const std::string& label) const {
    for (const auto& ld : input_dims_)
        if (ld.label == label) return ld.dim;
    throw DataError("model has no input size for label '" + label + "'");
}

Eigen::MatrixXd& SageModel::weight(int layer, int relation) {
    return params_.at(static_cast<std::size_t>(layer) * relations_.size() + static_cast<std::size_t>(relation));
}
const Eigen::MatrixXd& SageModel::weight(int layer, int relation) const {
    return params_.at(static_cast<std::size_t>(layer) * relations_.size() + static_cast<std::size_t>(relation));
}

void SageModel::write(std::ostream& out) const {
    out << kCheckpointMagic << '\n';
    const Config cfg = config_.to_config();
    for (const auto& [k, v] : cfg.values()) out << "config\t" << k << '=' << v << '\n';
    for (const auto& r : relations_) out << "relation\t" << r.neighbor_label << '\t' << r.node_label << '\n';
    for (const auto& ld : input_dims_) out << "input\t" << ld.label << '\t' << ld.dim << '\n';
    for (const auto& p : params_) {
        out << "param\t" << p.rows() << '\t' << p.cols() << '\n';
        bool first = true;
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
            for (Eigen::Index c = 0; c < p.cols(); ++c) {
                if (!first) out << ' ';
                out << format_double(p(r, c));
                first = false;
            }
        }
        out << '\n';
    }
}

SageModel SageModel::read(std::istream& in) {
    SageModel model;
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line) || line != kCheckpointMagic) throw SchemaError("not a sage checkpoint");
    Config cfg;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto f = split(line, '\t');
        if (f[0] == "config" && f.size() == 2) {
            auto eq = f[1].find('=');
            if (eq == std::string::npos) throw RowError(lineno, "bad config line");
            cfg.set(f[1].substr(0, eq), f[1].substr(eq + 1));
        } else if (f[0] == "relation" && f.size() == 3) {
            model.relations_.push_back({f[1], f[2]});
        } else if (f[0] == "input" && f.size() == 3) {
            long long d = 0;
            if (!parse_int(f[2], d) || d <= 0) throw RowError(lineno, "bad input size");
            model.input_dims_.push_back({f[1], static_cast<int>(d)});
        } else if (f[0] == "param" && f.size() == 3) {
            long long rows = 0, cols = 0;
            if (!parse_int(f[1], rows) || !parse_int(f[2], cols) || rows <= 0 || cols <= 0) {
                throw RowError(lineno, "bad parameter shape");
            }
            if (!std::getline(in, line)) throw RowError(lineno, "missing parameter values");
            ++lineno;
            std::istringstream vals(line);
            Eigen::MatrixXd p(rows, cols);
            std::string tok;
            for (Eigen::Index r = 0; r < p.rows(); ++r) {
                for (Eigen::Index c = 0; c < p.cols(); ++c) {
                    if (!(vals >> tok) || !parse_double(tok, p(r, c))) throw RowError(lineno, "bad parameter value");
                }
            }
            if (vals >> tok) throw RowError(lineno, "too many parameter values");
            model.params_.push_back(std::move(p));
        } else {
            throw RowError(lineno, "unrecognised checkpoint line");
        }
    }
    try {
        model.config_ = SageConfig::from_config(cfg);
    } catch (const ConfigError& e) {
        throw SchemaError(std::string("checkpoint config: ") + e.what());
    }
    const auto expected = static_cast<std::size_t>(model.config_.depth()) * model.relations_.size() + 2;
    if (model.params_.size() != expected) throw SchemaError("checkpoint parameter count does not match its config");
    return model;
}

void SageModel::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write(out);
}

SageModel SageModel::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return read(in);
}

SageContext::SageContext(const HeteroGraph& graph, const SageModel& model) : graph_(&graph) {
    const auto& alphabet = graph.node_labels();
    label_relations_.resize(alphabet.size());
    std::vector<std::optional<LabelId>> rel_nbr_label;
    for (int r = 0; r < static_cast<int>(model.relations().size()); ++r) {
        const auto& rel = model.relations()[static_cast<std::size_t>(r)];
        auto node_label = alphabet.find(rel.node_label);
        auto nbr_label = alphabet.find(rel.neighbor_label);
        rel_nbr_label.push_back(nbr_label);
        if (node_label) label_relations_[*node_label].push_back(r);
    }

    const bool nonzero_only = model.config().nonzero_edges_only;
    neighbors_.resize(graph.node_count());
    for (NodeId v = 0; v < graph.node_count(); ++v) {
        const auto& rels = label_relations_[graph.node(v).label];
        auto& lists = neighbors_[v];
        lists.resize(rels.size());
        for (const auto& adj : graph.adjacency(v)) {
            const auto& e = graph.edge(adj.edge);
            if (nonzero_only && e.weight && *e.weight == 0.0) continue;
            const auto lu = graph.node(adj.node).label;
            for (std::size_t k = 0; k < rels.size(); ++k) {
                if (rel_nbr_label[static_cast<std::size_t>(rels[k])] == lu) lists[k].push_back(adj.node);
            }
        }
    }
}

const std::vector<int>& SageContext::relations_of(NodeId v) const { return label_relations_[graph_->node(v).label]; }

const std::vector<NodeId>& SageContext::neighbors(NodeId v, std::size_t k) const { return neighbors_.at(v).at(k); }

Eigen::VectorXd mean_aggregate(std::span<const Eigen::VectorXd> states, Eigen::Index dim, double dropout, Rng& rng) {
    Eigen::VectorXd agg = Eigen::VectorXd::Zero(dim);
    if (states.empty()) return agg;
    std::bernoulli_distribution keep(1.0 - dropout);
    for (const auto& s : states) {
        if (s.size() != dim) throw DimensionMismatch("mean_aggregate: neighbor state size differs");
        if (dropout > 0.0) {
            for (Eigen::Index d = 0; d < dim; ++d)
                if (keep(rng)) agg[d] += s[d] / (1.0 - dropout);
        } else {
            agg += s;
        }
    }
    return agg / static_cast<double>(states.size());
}

std::vector<Eigen::VectorXd> sage_forward(const SageContext& ctx, const SageModel& model,
                                          std::span<const NodeId> nodes, SageMode mode, Rng& rng) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(nodes.size());
    for (auto v : nodes) out.push_back(forward_one(ctx, model, v, mode, rng, nullptr));
    return out;
}

double link_head(const Eigen::VectorXd& za, const Eigen::VectorXd& zb, const Eigen::VectorXd& w, double bias) {
    if (za.size() != zb.size() || za.size() != w.size()) throw DimensionMismatch("link_head: size mismatch");
    return sigmoid(w.dot(za.cwiseProduct(zb)) + bias);
}

double link_probability(const SageContext& ctx, const SageModel& model, NodeId a, NodeId b) {
    Rng unused(0);
    auto za = forward_one(ctx, model, a, SageMode::eval, unused, nullptr);
    auto zb = forward_one(ctx, model, b, SageMode::eval, unused, nullptr);
    return link_head(za, zb, model.head_weight().col(0), model.head_bias());
}

UnsupervisedLoss unsupervised_loss(const Eigen::VectorXd& zu, const Eigen::VectorXd& zpos,
                                   std::span<const Eigen::VectorXd> znegs, int Q) {
    if (zu.size() != zpos.size()) throw DimensionMismatch("unsupervised_loss: size mismatch");
    UnsupervisedLoss out;
    double dp = zu.dot(zpos);
    out.loss = softplus(-dp);
    double gp = sigmoid(dp) - 1.0;
    out.grad_u = gp * zpos;
    out.grad_pos = gp * zu;
    if (!znegs.empty()) {
        const double scale = static_cast<double>(Q) / static_cast<double>(znegs.size());
        for (const auto& zn : znegs) {
            if (zn.size() != zu.size()) throw DimensionMismatch("unsupervised_loss: size mismatch");
            double dn = zu.dot(zn);
            out.loss += scale * softplus(dn);
            double gn = scale * sigmoid(dn);
            out.grad_u += gn * zn;
            out.grad_negs.push_back(gn * zu);
        }
    }
    return out;
}

double sage_pair_loss(const SageContext& ctx, const SageModel& model, const LabeledPair& pair, SageMode mode,
                      Rng& rng, std::vector<Eigen::MatrixXd>* grads) {
    Tape ta, tb;
    Eigen::VectorXd za = forward_one(ctx, model, pair.a, mode, rng, grads ? &ta : nullptr);
    Eigen::VectorXd zb = forward_one(ctx, model, pair.b, mode, rng, grads ? &tb : nullptr);
    Eigen::VectorXd w = model.head_weight().col(0);
    Eigen::VectorXd prod = za.cwiseProduct(zb);
    double s = w.dot(prod) + model.head_bias();
    double loss = pair.label * softplus(-s) + (1.0 - pair.label) * softplus(s);
    if (grads) {
        double ds = sigmoid(s) - pair.label;
        auto& gw = (*grads)[grads->size() - 2];
        gw.col(0) += ds * prod;
        (*grads).back()(0, 0) += ds;
        run_backward(ctx, model, ta, ds * w.cwiseProduct(zb), *grads);
        run_backward(ctx, model, tb, ds * w.cwiseProduct(za), *grads);
    }
    return loss;
}

SageTrainResult train_hinsage(const SageContext& ctx, SageModel& model, std::span<const LabeledPair> pairs) {
    const auto& cfg = model.config();
    if (pairs.empty()) throw DataError("train_hinsage: empty training set");
    for (const auto& p : pairs) {
        if (p.a >= ctx.graph().node_count() || p.b >= ctx.graph().node_count()) {
            throw std::out_of_range("train_hinsage: pair references a missing node");
        }
    }
    SageTrainResult result;
    AdamState adam;
    adam.alpha = cfg.learning_rate;
    std::vector<std::size_t> order(pairs.size());
    std::vector<Eigen::MatrixXd> grads;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        auto rng = make_rng(cfg.seed, {0x7a1, static_cast<std::uint64_t>(epoch)});
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        double total = 0.0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const auto end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            grads.clear();
            for (const auto& p : model.params()) grads.push_back(Eigen::MatrixXd::Zero(p.rows(), p.cols()));
            for (std::size_t i = start; i < end; ++i) {
                total += sage_pair_loss(ctx, model, pairs[order[i]], SageMode::train, rng, &grads);
            }
            for (auto& g : grads) g /= static_cast<double>(end - start);
            adam_step(model.params(), grads, adam);
        }
        result.epoch_losses.push_back(total / static_cast<double>(pairs.size()));
    }
    return result;
}

} // namespace hetlink
