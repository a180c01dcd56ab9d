#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace hetlink {

/// One trial, merged across every CSV row sharing its NCT id.
struct TrialRecord {
    std::string nct_id;
    std::string trial_id;
    std::vector<std::string> diseases;
    std::vector<std::string> mesh_terms;
    std::vector<std::string> drugs;
    /// AE column name (including the "AE_" prefix) -> dropout fraction in [0, 1].
    std::map<std::string, double> adverse_events;

    bool operator==(const TrialRecord&) const = default;
};

inline constexpr const char* kColNctId = "NCT_id";
inline constexpr const char* kColTrialId = "Trial ID";
inline constexpr const char* kColDisease = "Disease";
inline constexpr const char* kColMesh = "MeSH Term";
inline constexpr const char* kColDrug = "Drug";
inline constexpr const char* kAePrefix = "AE_";

/// RFC 4180 style reader: comma separated, double-quoted fields may contain
/// commas, doubled quotes and newlines. Each row carries its starting line number.
struct CsvRow {
    std::size_t line = 0;
    std::vector<std::string> fields;
};
std::vector<CsvRow> read_csv(std::istream& in);
std::string csv_escape(const std::string& field);

/// Parse trial rows. Long-format exports are merged by NCT id: Disease,
/// MeSH Term and Drug values are unioned in first-seen order, AE fractions
/// must agree between rows of the same trial.
std::vector<TrialRecord> parse_trials_csv(std::istream& in);
std::vector<TrialRecord> parse_trials_csv(const std::filesystem::path& path);

/// Long-format writer; parse_trials_csv(write_trials_csv(r)) == r.
void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records);
void write_trials_csv(const std::filesystem::path& path, const std::vector<TrialRecord>& records);

/// AE names of a dataset, sorted. Throws DataError if records disagree.
std::vector<std::string> adverse_event_names(const std::vector<TrialRecord>& records);

} // namespace hetlink
