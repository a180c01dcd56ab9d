#include "hetlink/ingest.hpp"

#include "hetlink/errors.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace hetlink {

std::string normalize_term(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (unsigned char c : raw) {
        bool sep = std::isspace(c) || (c < 0x80 && std::ispunct(c));
        if (sep) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += static_cast<char>(c < 0x80 ? std::tolower(c) : c);
    }
    return out;
}

namespace {

std::vector<std::string> tokens_of(const std::string& normalized) {
    std::vector<std::string> toks;
    std::istringstream in(normalized);
    std::string t;
    while (in >> t) toks.push_back(t);
    return toks;
}

} // namespace

KeywordSplit extract_keywords(std::span<const std::string> entries) {
    std::set<std::string> distinct;
    for (const auto& e : entries) {
        auto n = normalize_term(e);
        if (!n.empty()) distinct.insert(std::move(n));
    }
    std::map<std::string, std::size_t> doc_freq;
    for (const auto& entry : distinct) {
        auto toks = tokens_of(entry);
        std::set<std::string> unique(toks.begin(), toks.end());
        for (const auto& t : unique) ++doc_freq[t];
    }
    KeywordSplit split;
    for (const auto& [tok, df] : doc_freq) {
        if (df >= 2) split.keywords.insert(tok);
    }
    for (const auto& entry : distinct) {
        if (split.keywords.count(entry)) continue;
        split.specifics.insert(entry);
        auto& members = split.membership[entry];
        for (const auto& t : tokens_of(entry)) {
            if (split.keywords.count(t)) members.insert(t);
        }
    }
    return split;
}

KeywordSplit condition_split(const std::vector<TrialRecord>& records) {
    std::vector<std::string> entries;
    for (const auto& r : records) {
        entries.insert(entries.end(), r.diseases.begin(), r.diseases.end());
        entries.insert(entries.end(), r.mesh_terms.begin(), r.mesh_terms.end());
    }
    return extract_keywords(entries);
}

KeywordSplit drug_split(const std::vector<TrialRecord>& records) {
    std::vector<std::string> entries;
    for (const auto& r : records) entries.insert(entries.end(), r.drugs.begin(), r.drugs.end());
    return extract_keywords(entries);
}

TrialTerms trial_terms(const TrialRecord& record, const KeywordSplit& conditions,
                       const KeywordSplit& drugs) {
    TrialTerms terms;
    auto visit = [](const std::string& raw, const KeywordSplit& split, std::set<std::string>& kw,
                    std::set<std::string>& spec) -> std::string {
        auto n = normalize_term(raw);
        for (const auto& t : tokens_of(n)) {
            if (split.keywords.count(t)) kw.insert(t);
        }
        if (split.specifics.count(n)) {
            spec.insert(n);
            return n;
        }
        return {};
    };
    for (const auto& d : record.diseases) {
        auto s = visit(d, conditions, terms.conditions, terms.specific_conditions);
        if (!s.empty()) terms.disease_specifics.insert(s);
    }
    for (const auto& m : record.mesh_terms) visit(m, conditions, terms.conditions, terms.specific_conditions);
    for (const auto& d : record.drugs) visit(d, drugs, terms.drugs, terms.specific_drugs);
    return terms;
}

TrialVocabulary::TrialVocabulary(const KeywordSplit& conditions, const KeywordSplit& drugs)
    : conditions_(conditions.keywords.begin(), conditions.keywords.end()),
      specific_conditions_(conditions.specifics.begin(), conditions.specifics.end()),
      drugs_(drugs.keywords.begin(), drugs.keywords.end()),
      specific_drugs_(drugs.specifics.begin(), drugs.specifics.end()) {}

TrialVocabulary TrialVocabulary::from_records(std::span<const TrialRecord> records,
                                              const KeywordSplit& conditions, const KeywordSplit& drugs) {
    std::set<std::string> c, sc, d, sd;
    for (const auto& r : records) {
        auto t = trial_terms(r, conditions, drugs);
        c.insert(t.conditions.begin(), t.conditions.end());
        sc.insert(t.specific_conditions.begin(), t.specific_conditions.end());
        d.insert(t.drugs.begin(), t.drugs.end());
        sd.insert(t.specific_drugs.begin(), t.specific_drugs.end());
    }
    TrialVocabulary v;
    v.conditions_.assign(c.begin(), c.end());
    v.specific_conditions_.assign(sc.begin(), sc.end());
    v.drugs_.assign(d.begin(), d.end());
    v.specific_drugs_.assign(sd.begin(), sd.end());
    return v;
}

std::size_t TrialVocabulary::dim() const noexcept {
    return conditions_.size() + specific_conditions_.size() + drugs_.size() + specific_drugs_.size();
}

std::vector<double> TrialVocabulary::encode(const TrialRecord& record) const {
    std::vector<double> out(dim(), 0.0);
    std::size_t offset = 0;
    auto mark = [&](const std::vector<std::string>& vocab, const std::set<std::string>& items) {
        for (const auto& item : items) {
            auto it = std::lower_bound(vocab.begin(), vocab.end(), item);
            if (it != vocab.end() && *it == item) out[offset + static_cast<std::size_t>(it - vocab.begin())] = 1.0;
        }
        offset += vocab.size();
    };
    // Terms are matched by token/entry against the vocabularies themselves, so
    // an encoder fit on a subset of trials ignores unseen items.
    std::set<std::string> cond_tokens, cond_entries, drug_tokens, drug_entries;
    auto collect = [](const std::vector<std::string>& raws, std::set<std::string>& toks,
                      std::set<std::string>& entries) {
        for (const auto& raw : raws) {
            auto n = normalize_term(raw);
            for (const auto& t : tokens_of(n)) toks.insert(t);
            entries.insert(n);
        }
    };
    collect(record.diseases, cond_tokens, cond_entries);
    collect(record.mesh_terms, cond_tokens, cond_entries);
    collect(record.drugs, drug_tokens, drug_entries);
    mark(conditions_, cond_tokens);
    mark(specific_conditions_, cond_entries);
    mark(drugs_, drug_tokens);
    mark(specific_drugs_, drug_entries);
    return out;
}

std::vector<double> ae_prevalence(std::span<const TrialRecord> records, const std::string& ae) {
    std::size_t nonzero = 0;
    double sum = 0.0;
    for (const auto& r : records) {
        auto it = r.adverse_events.find(ae);
        if (it == r.adverse_events.end()) throw DataError("trial " + r.nct_id + " lacks " + ae);
        if (it->second > 0.0) {
            ++nonzero;
            sum += it->second;
        }
    }
    double rate = records.empty() ? 0.0 : static_cast<double>(nonzero) / static_cast<double>(records.size());
    double mean = nonzero ? sum / static_cast<double>(nonzero) : 0.0;
    return {rate, mean};
}

HeteroGraph build_knowledge_graph(const std::vector<TrialRecord>& records, const KeywordSplit& conditions,
                                  const KeywordSplit& drugs) {
    if (records.empty()) throw DataError("cannot build a knowledge graph from zero records");
    auto ae_names = adverse_event_names(records);

    HeteroGraph g;
    std::vector<NodeId> trial_nodes;
    for (const auto& r : records) trial_nodes.push_back(g.add_node(labels::kClinicalTrial, std::nullopt, r.nct_id));
    std::map<std::string, NodeId> ae_node, cond_node, spec_cond_node, drug_node, spec_drug_node;
    for (const auto& a : ae_names) ae_node[a] = g.add_node(labels::kAdverseEvent, std::nullopt, a);
    for (const auto& c : conditions.keywords) cond_node[c] = g.add_node(labels::kCondition, std::nullopt, c);
    for (const auto& s : conditions.specifics)
        spec_cond_node[s] = g.add_node(labels::kSpecificCondition, std::nullopt, s);
    for (const auto& d : drugs.keywords) drug_node[d] = g.add_node(labels::kDrug, std::nullopt, d);
    for (const auto& s : drugs.specifics) spec_drug_node[s] = g.add_node(labels::kSpecificDrug, std::nullopt, s);

    std::set<std::tuple<NodeId, NodeId, std::string_view>> seen;
    auto link = [&](NodeId a, NodeId b, std::string_view label) {
        auto key = std::make_tuple(std::min(a, b), std::max(a, b), label);
        if (seen.insert(key).second) g.add_edge(a, b, label);
    };
    auto link_all = [&](NodeId t, const std::set<std::string>& items, const std::map<std::string, NodeId>& nodes,
                        std::string_view label) {
        for (const auto& item : items) {
            if (auto it = nodes.find(item); it != nodes.end()) link(t, it->second, label);
        }
    };

    std::set<std::pair<std::string, std::string>> targeting;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        NodeId t = trial_nodes[i];
        for (const auto& [ae, frac] : r.adverse_events) {
            if (frac > 0.0) link(t, ae_node.at(ae), labels::kExpresses);
        }
        auto terms = trial_terms(r, conditions, drugs);
        link_all(t, terms.conditions, cond_node, labels::kDiagnosis);
        link_all(t, terms.specific_conditions, spec_cond_node, labels::kSpecificDiagnosis);
        link_all(t, terms.drugs, drug_node, labels::kTreatment);
        link_all(t, terms.specific_drugs, spec_drug_node, labels::kSpecificTreatment);
        for (const auto& s : terms.disease_specifics) {
            for (const auto& d : terms.drugs) targeting.emplace(s, d);
        }
    }
    for (const auto& [spec, members] : conditions.membership) {
        for (const auto& kw : members) link(cond_node.at(kw), spec_cond_node.at(spec), labels::kConditionSpecification);
    }
    for (const auto& [spec, members] : drugs.membership) {
        for (const auto& kw : members) link(drug_node.at(kw), spec_drug_node.at(spec), labels::kDrugSpecification);
    }
    for (const auto& [s, d] : targeting) link(spec_cond_node.at(s), drug_node.at(d), labels::kTreatmentTargeting);

    g.freeze();
    return g;
}

HeteroGraph build_binodal_graph(const std::vector<TrialRecord>& records) {
    if (records.empty()) throw DataError("cannot build a bi-nodal graph from zero records");
    auto ae_names = adverse_event_names(records);
    TrialVocabulary vocab(condition_split(records), drug_split(records));

    HeteroGraph g;
    std::vector<NodeId> trials;
    for (const auto& r : records) trials.push_back(g.add_node(labels::kClinicalTrial, vocab.encode(r), r.nct_id));
    std::vector<NodeId> aes;
    for (const auto& a : ae_names) aes.push_back(g.add_node(labels::kAdverseEvent, ae_prevalence(records, a), a));
    for (std::size_t i = 0; i < records.size(); ++i) {
        for (std::size_t j = 0; j < ae_names.size(); ++j) {
            double w = records[i].adverse_events.at(ae_names[j]) > 0.0 ? 1.0 : 0.0;
            g.add_edge(trials[i], aes[j], labels::kTrialEvent, w);
        }
    }
    g.freeze();
    return g;
}

std::vector<std::pair<std::string, HeteroGraph>> build_constituent_graphs(
    const HeteroGraph& knowledge_graph, const std::vector<TrialRecord>& records) {
    const auto& kg = knowledge_graph;
    auto trial_label = kg.node_labels().find(labels::kClinicalTrial);
    if (!trial_label) throw DataError("knowledge graph has no Clinical Trial nodes");

    std::unordered_map<std::string, NodeId> trial_by_name;
    for (auto v : kg.nodes_with_label(*trial_label)) trial_by_name.emplace(kg.node(v).name, v);

    std::vector<LabelId> expand;
    for (auto name : {labels::kConditionSpecification, labels::kDrugSpecification, labels::kTreatmentTargeting}) {
        if (auto l = kg.edge_labels().find(name)) expand.push_back(*l);
    }

    std::vector<std::pair<std::string, HeteroGraph>> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        auto it = trial_by_name.find(r.nct_id);
        if (it == trial_by_name.end()) throw DataError("trial " + r.nct_id + " not in knowledge graph");
        NodeId t = it->second;
        std::vector<NodeId> keep{t};
        for (const auto& a : kg.adjacency(t)) {
            keep.push_back(a.node);
            for (const auto& b : kg.adjacency(a.node)) {
                if (std::find(expand.begin(), expand.end(), kg.edge(b.edge).label) != expand.end()) {
                    keep.push_back(b.node);
                }
            }
        }
        out.emplace_back(r.nct_id, kg.induced_subgraph(keep));
    }
    return out;
}

} // namespace hetlink
