#include "hetlink/walks.hpp"

#include "hetlink/errors.hpp"
#include "hetlink/text.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <thread>

namespace hetlink {

std::string MetaPathSpec::to_string() const { return join(labels, ","); }

LabelAliases default_label_aliases() {
    return {{"Side Effect", "Adverse Event"},
            {"Disease", "Condition"},
            {"Specific Disease", "Specific Condition"}};
}

std::vector<MetaPathSpec> default_metapaths() {
    return {
        {{"Clinical Trial", "Side Effect", "Clinical Trial"}},
        {{"Clinical Trial", "Specific Drug", "Clinical Trial"}},
        {{"Clinical Trial", "Drug", "Specific Drug", "Clinical Trial"}},
        {{"Clinical Trial", "Specific Drug", "Drug", "Clinical Trial"}},
        {{"Clinical Trial", "Specific Disease", "Clinical Trial"}},
        {{"Clinical Trial", "Disease", "Specific Disease", "Clinical Trial"}},
        {{"Clinical Trial", "Specific Disease", "Disease", "Clinical Trial"}},
        {{"Drug", "Specific Drug", "Drug"}},
        {{"Specific Drug", "Drug", "Specific Drug"}},
        {{"Disease", "Specific Disease", "Disease"}},
        {{"Specific Disease", "Disease", "Specific Disease"}},
        {{"Drug", "Disease", "Drug"}},
        {{"Disease", "Drug", "Disease"}},
        {{"Specific Drug", "Disease", "Specific Drug"}},
        {{"Specific Disease", "Drug", "Specific Disease"}},
        {{"Side Effect", "Clinical Trial", "Side Effect"}},
    };
}

std::vector<MetaPathSpec> parse_metapaths(std::istream& in) {
    std::vector<MetaPathSpec> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto body = trim(line);
        if (body.empty() || body.front() == '#') continue;
        MetaPathSpec spec;
        for (const auto& part : split(body, ',')) spec.labels.emplace_back(trim(part));
        if (spec.labels.size() < 2) throw RowError(lineno, "metapath needs at least two labels");
        for (const auto& l : spec.labels) {
            if (l.empty()) throw RowError(lineno, "empty label in metapath");
        }
        out.push_back(std::move(spec));
    }
    return out;
}

std::vector<MetaPathSpec> load_metapaths(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open metapath file " + path.string());
    return parse_metapaths(in);
}

void write_metapaths(std::ostream& out, const std::vector<MetaPathSpec>& metapaths) {
    for (const auto& mp : metapaths) out << mp.to_string() << '\n';
}

std::optional<std::vector<LabelId>> resolve_metapath(const HeteroGraph& graph, const MetaPathSpec& spec,
                                                     const LabelAliases& aliases, std::string* problem) {
    auto fail = [&](const std::string& why) -> std::optional<std::vector<LabelId>> {
        if (problem) *problem = "metapath [" + spec.to_string() + "]: " + why;
        return std::nullopt;
    };
    if (spec.labels.size() < 2) return fail("needs at least two labels");

    std::vector<LabelId> ids;
    for (const auto& name : spec.labels) {
        auto it = aliases.find(name);
        const auto& canonical = it == aliases.end() ? name : it->second;
        auto id = graph.node_labels().find(canonical);
        if (!id) return fail("label '" + name + "' not in graph");
        ids.push_back(*id);
    }

    std::set<std::pair<LabelId, LabelId>> joined;
    for (const auto& e : graph.edges()) {
        auto a = graph.node(e.u).label;
        auto b = graph.node(e.v).label;
        joined.emplace(a, b);
        joined.emplace(b, a);
    }
    auto check = [&](std::size_t i, std::size_t j) {
        return joined.count({ids[i], ids[j]}) != 0;
    };
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
        if (!check(i, i + 1)) {
            return fail("no edge joins '" + spec.labels[i] + "' and '" + spec.labels[i + 1] + "'");
        }
    }
    if (ids.size() > 2 && !check(ids.size() - 1, 1)) {
        return fail("cannot cycle from '" + spec.labels.back() + "' to '" + spec.labels[1] + "'");
    }
    return ids;
}

void WalkConfig::validate() const {
    if (walk_length <= 0 || walks_per_node <= 0) throw ConfigError("walk_length and walks_per_node must be positive");
    if (!(p > 0.0) || !(q > 0.0)) throw ConfigError("walk p and q must be positive");
    if (threads <= 0) throw ConfigError("walk threads must be positive");
}

StepDistribution next_step_distribution(const HeteroGraph& graph, std::optional<NodeId> prev, NodeId curr,
                                        LabelId allowed, const WalkConfig& config) {
    StepDistribution dist;
    dist.candidates = graph.neighbors(curr, std::nullopt, allowed);
    dist.candidates.erase(std::unique(dist.candidates.begin(), dist.candidates.end()), dist.candidates.end());
    if (dist.candidates.empty()) return dist;

    dist.probs.assign(dist.candidates.size(), 1.0);
    const bool biased = prev && (config.p != 1.0 || config.q != 1.0);
    if (biased) {
        for (std::size_t i = 0; i < dist.candidates.size(); ++i) {
            NodeId w = dist.candidates[i];
            if (w == *prev) {
                dist.probs[i] = 1.0 / config.p;
            } else if (!graph.has_edge(*prev, w)) {
                dist.probs[i] = 1.0 / config.q;
            }
        }
    }
    double total = 0.0;
    for (double w : dist.probs) total += w;
    for (double& w : dist.probs) w /= total;
    return dist;
}

std::vector<NodeId> metapath_walk(const HeteroGraph& graph, NodeId start, std::span<const LabelId> metapath,
                                  const WalkConfig& config, Rng& rng) {
    if (metapath.size() < 2) throw std::invalid_argument("metapath needs at least two labels");
    if (graph.node(start).label != metapath.front()) {
        throw std::invalid_argument("start node " + std::to_string(start) + " has label '" + graph.label_name(start) +
                                    "', metapath anchor is '" + graph.node_labels().name(metapath.front()) + "'");
    }
    const std::size_t cycle = metapath.size() - 1;
    std::vector<NodeId> walk{start};
    walk.reserve(static_cast<std::size_t>(config.walk_length));
    std::optional<NodeId> prev;
    NodeId curr = start;
    for (std::size_t i = 0; walk.size() < static_cast<std::size_t>(config.walk_length); ++i) {
        LabelId allowed = metapath[(i % cycle) + 1];
        auto dist = next_step_distribution(graph, prev, curr, allowed, config);
        if (dist.empty()) break;
        double u = uniform01(rng);
        std::size_t pick = dist.candidates.size() - 1;
        double acc = 0.0;
        for (std::size_t k = 0; k < dist.probs.size(); ++k) {
            acc += dist.probs[k];
            if (u < acc) {
                pick = k;
                break;
            }
        }
        prev = curr;
        curr = dist.candidates[pick];
        walk.push_back(curr);
    }
    return walk;
}

std::size_t WalkCorpus::token_count() const {
    std::size_t n = 0;
    for (const auto& w : walks) n += w.size();
    return n;
}

WalkCorpus generate_corpus(const HeteroGraph& graph, const std::vector<MetaPathSpec>& metapaths,
                           const WalkConfig& config, const LabelAliases& aliases) {
    config.validate();
    if (!graph.frozen()) throw std::logic_error("generate_corpus requires a frozen graph");

    struct Task {
        std::size_t metapath;
        NodeId start;
        int rep;
    };
    WalkCorpus corpus;
    std::vector<std::vector<LabelId>> resolved(metapaths.size());
    std::vector<Task> tasks;
    for (std::size_t m = 0; m < metapaths.size(); ++m) {
        std::string problem;
        auto ids = resolve_metapath(graph, metapaths[m], aliases, &problem);
        if (!ids) {
            corpus.warnings.push_back("skipped " + problem);
            continue;
        }
        auto anchors = graph.nodes_with_label(ids->front());
        if (anchors.empty()) {
            corpus.warnings.push_back("skipped metapath [" + metapaths[m].to_string() + "]: no anchor nodes");
            continue;
        }
        resolved[m] = std::move(*ids);
        for (auto v : anchors)
            for (int r = 0; r < config.walks_per_node; ++r) tasks.push_back({m, v, r});
    }

    corpus.walks.resize(tasks.size());
    auto run = [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
            const auto& task = tasks[t];
            auto rng = make_rng(config.seed, {task.metapath, task.start, static_cast<std::uint64_t>(task.rep)});
            corpus.walks[t] = metapath_walk(graph, task.start, resolved[task.metapath], config, rng);
        }
    };
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(config.threads), std::max<std::size_t>(tasks.size(), 1));
    if (workers <= 1) {
        run(0, tasks.size());
    } else {
        std::vector<std::thread> pool;
        const std::size_t chunk = (tasks.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            std::size_t b = w * chunk;
            std::size_t e = std::min(tasks.size(), b + chunk);
            if (b < e) pool.emplace_back(run, b, e);
        }
        for (auto& th : pool) th.join();
    }

    corpus.label_sequences.reserve(tasks.size());
    corpus.metapath_of_walk.reserve(tasks.size());
    for (std::size_t t = 0; t < tasks.size(); ++t) {
        std::vector<LabelId> seq;
        seq.reserve(corpus.walks[t].size());
        for (auto v : corpus.walks[t]) seq.push_back(graph.node(v).label);
        corpus.label_sequences.push_back(std::move(seq));
        corpus.metapath_of_walk.push_back(tasks[t].metapath);
    }
    return corpus;
}

void write_corpus(std::ostream& out, const WalkCorpus& corpus) {
    for (const auto& walk : corpus.walks) {
        for (std::size_t i = 0; i < walk.size(); ++i) {
            if (i) out << ' ';
            out << walk[i];
        }
        out << '\n';
    }
}

std::uint64_t corpus_hash(const WalkCorpus& corpus) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](std::uint64_t x) {
        for (int b = 0; b < 8; ++b) {
            h ^= (x >> (8 * b)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& walk : corpus.walks) {
        feed(walk.size());
        for (auto v : walk) feed(v);
    }
    return h;
}

} // namespace hetlink
