#pragma once

#include "hetlink/hetgraph.hpp"
#include "hetlink/records.hpp"

#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hetlink {

namespace labels {
inline constexpr std::string_view kClinicalTrial = "Clinical Trial";
inline constexpr std::string_view kAdverseEvent = "Adverse Event";
inline constexpr std::string_view kDrug = "Drug";
inline constexpr std::string_view kSpecificDrug = "Specific Drug";
inline constexpr std::string_view kCondition = "Condition";
inline constexpr std::string_view kSpecificCondition = "Specific Condition";

inline constexpr std::string_view kExpresses = "Expresses";
inline constexpr std::string_view kDiagnosis = "Diagnosis";
inline constexpr std::string_view kSpecificDiagnosis = "Specific Diagnosis";
inline constexpr std::string_view kTreatment = "Treatment";
inline constexpr std::string_view kSpecificTreatment = "Specific Treatment";
inline constexpr std::string_view kConditionSpecification = "Condition Specification";
inline constexpr std::string_view kDrugSpecification = "Drug Specification";
inline constexpr std::string_view kTreatmentTargeting = "Treatment Targeting";

/// The single (unlabelled in spirit) edge type of the bi-nodal graph.
inline constexpr std::string_view kTrialEvent = "Trial-Event";
} // namespace labels

/// Lower-case, punctuation replaced by spaces, whitespace collapsed.
std::string normalize_term(std::string_view raw);

/// Keyword/specific partition of a family of free-text entries
/// ("Condition"/"Specific Condition", or "Drug"/"Specific Drug").
struct KeywordSplit {
    std::set<std::string> keywords;
    std::set<std::string> specifics;
    /// specific -> keywords among its tokens
    std::map<std::string, std::set<std::string>> membership;
};

/// Tokens occurring in at least two distinct normalized entries become
/// keywords; every distinct entry that is not itself a keyword is a specific.
KeywordSplit extract_keywords(std::span<const std::string> entries);

/// Condition split over Disease + MeSH Term entries of all records.
KeywordSplit condition_split(const std::vector<TrialRecord>& records);
/// Drug split over Drug entries of all records.
KeywordSplit drug_split(const std::vector<TrialRecord>& records);

/// Which vocabulary items a trial mentions.
struct TrialTerms {
    std::set<std::string> conditions;
    std::set<std::string> specific_conditions;
    std::set<std::string> disease_specifics; // specifics listed under Disease only
    std::set<std::string> drugs;
    std::set<std::string> specific_drugs;
};
TrialTerms trial_terms(const TrialRecord& record, const KeywordSplit& conditions,
                       const KeywordSplit& drugs);

/// Multi-hot trial encoding over four lexicographically ordered vocabularies:
/// Condition | Specific Condition | Drug | Specific Drug. Items outside the
/// vocabulary encode as zeros.
class TrialVocabulary {
public:
    TrialVocabulary() = default;
    TrialVocabulary(const KeywordSplit& conditions, const KeywordSplit& drugs);
    /// Vocabulary restricted to what `records` mention under the given splits.
    static TrialVocabulary from_records(std::span<const TrialRecord> records,
                                        const KeywordSplit& conditions, const KeywordSplit& drugs);

    std::size_t dim() const noexcept;
    std::vector<double> encode(const TrialRecord& record) const;

    const std::vector<std::string>& conditions() const noexcept { return conditions_; }
    const std::vector<std::string>& specific_conditions() const noexcept { return specific_conditions_; }
    const std::vector<std::string>& drugs() const noexcept { return drugs_; }
    const std::vector<std::string>& specific_drugs() const noexcept { return specific_drugs_; }

private:
    std::vector<std::string> conditions_;
    std::vector<std::string> specific_conditions_;
    std::vector<std::string> drugs_;
    std::vector<std::string> specific_drugs_;
};

/// Incidence rate and mean nonzero dropout fraction of one AE over `records`.
std::vector<double> ae_prevalence(std::span<const TrialRecord> records, const std::string& ae);

/// Complete knowledge graph: six node labels, eight edge labels, simple, frozen.
HeteroGraph build_knowledge_graph(const std::vector<TrialRecord>& records, const KeywordSplit& conditions,
                                  const KeywordSplit& drugs);

/// Bi-nodal graph: trials (multi-hot attributes) and AEs (prevalence
/// attributes), every trial-AE pair joined with weight 1 iff fraction > 0.
HeteroGraph build_binodal_graph(const std::vector<TrialRecord>& records);

/// One induced subgraph of the knowledge graph per trial: the trial, its
/// neighbors, and the specification/targeting partners of those neighbors.
std::vector<std::pair<std::string, HeteroGraph>> build_constituent_graphs(
    const HeteroGraph& knowledge_graph, const std::vector<TrialRecord>& records);

} // namespace hetlink
