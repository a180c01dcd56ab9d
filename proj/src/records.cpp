#include "hetlink/records.hpp"

#include "hetlink/errors.hpp"
#include "hetlink/text.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <unordered_map>

namespace hetlink {

std::vector<CsvRow> read_csv(std::istream& in) {
    std::vector<CsvRow> rows;
    CsvRow row;
    std::string field;
    bool in_quotes = false;
    bool row_has_content = false;
    std::size_t line = 1;
    row.line = 1;

    auto end_field = [&] {
        row.fields.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        if (row_has_content || row.fields.size() > 1 || !row.fields.front().empty()) {
            rows.push_back(std::move(row));
        }
        row = CsvRow{};
        row_has_content = false;
    };

    char c = 0;
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            row_has_content = true;
            break;
        case ',':
            end_field();
            break;
        case '\r':
            break;
        case '\n':
            end_row();
            ++line;
            row.line = line;
            break;
        default:
            field += c;
        }
    }
    if (in_quotes) throw RowError(row.line, "unterminated quoted field");
    if (!field.empty() || !row.fields.empty() || row_has_content) end_row();
    return rows;
}

std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

namespace {

void add_unique(std::vector<std::string>& list, const std::string& value) {
    auto v = std::string(trim(value));
    if (v.empty()) return;
    if (std::find(list.begin(), list.end(), v) == list.end()) list.push_back(std::move(v));
}

} // namespace

std::vector<TrialRecord> parse_trials_csv(std::istream& in) {
    auto rows = read_csv(in);
    if (rows.empty()) throw SchemaError("missing header row");

    auto header = rows.front().fields;
    if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        auto name = std::string(trim(header[i]));
        if (col.count(name)) throw SchemaError("duplicate column: " + name);
        col[name] = i;
    }
    for (const char* required : {kColNctId, kColTrialId, kColDisease, kColMesh, kColDrug}) {
        if (!col.count(required)) throw SchemaError(std::string("missing column: ") + required);
    }
    std::vector<std::pair<std::string, std::size_t>> ae_cols;
    for (std::size_t i = 0; i < header.size(); ++i) {
        auto name = std::string(trim(header[i]));
        if (name.rfind(kAePrefix, 0) == 0) ae_cols.emplace_back(name, i);
    }

    std::vector<TrialRecord> records;
    std::unordered_map<std::string, std::size_t> by_id;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.fields.size() != header.size()) {
            throw RowError(row.line, "expected " + std::to_string(header.size()) + " fields, found " +
                                         std::to_string(row.fields.size()));
        }
        auto cell = [&](const char* name) { return std::string(trim(row.fields[col.at(name)])); };
        auto nct = cell(kColNctId);
        if (nct.empty()) throw RowError(row.line, "empty NCT_id");

        std::map<std::string, double> aes;
        for (const auto& [name, idx] : ae_cols) {
            double x = 0;
            if (!parse_double(row.fields[idx], x)) {
                throw RowError(row.line, "column " + name + ": cannot parse fraction '" + row.fields[idx] + "'");
            }
            if (!(x >= 0.0 && x <= 1.0)) {
                throw RowError(row.line, "column " + name + ": fraction " + row.fields[idx] + " outside [0,1]");
            }
            aes[name] = x;
        }

        auto [it, inserted] = by_id.try_emplace(nct, records.size());
        if (inserted) {
            TrialRecord rec;
            rec.nct_id = nct;
            rec.trial_id = cell(kColTrialId);
            rec.adverse_events = std::move(aes);
            records.push_back(std::move(rec));
        } else {
            auto& rec = records[it->second];
            if (rec.adverse_events != aes) {
                throw RowError(row.line, "AE fractions for " + nct + " disagree with an earlier row");
            }
            auto tid = cell(kColTrialId);
            if (rec.trial_id.empty()) {
                rec.trial_id = tid;
            } else if (!tid.empty() && tid != rec.trial_id) {
                throw RowError(row.line, "Trial ID for " + nct + " disagrees with an earlier row");
            }
        }
        auto& rec = records[it->second];
        add_unique(rec.diseases, row.fields[col.at(kColDisease)]);
        add_unique(rec.mesh_terms, row.fields[col.at(kColMesh)]);
        add_unique(rec.drugs, row.fields[col.at(kColDrug)]);
    }
    return records;
}

std::vector<TrialRecord> parse_trials_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    return parse_trials_csv(in);
}

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
    auto ae_names = adverse_event_names(records);
    out << kColNctId << ',' << csv_escape(kColTrialId) << ',' << kColDisease;
    for (const auto& name : ae_names) out << ',' << csv_escape(name);
    out << ',' << csv_escape(kColMesh) << ',' << kColDrug << '\n';

    for (const auto& rec : records) {
        std::size_t rows = std::max({rec.diseases.size(), rec.mesh_terms.size(), rec.drugs.size(),
                                     std::size_t{1}});
        for (std::size_t i = 0; i < rows; ++i) {
            auto at = [i](const std::vector<std::string>& v) { return i < v.size() ? v[i] : std::string(); };
            out << csv_escape(rec.nct_id) << ',' << csv_escape(rec.trial_id) << ','
                << csv_escape(at(rec.diseases));
            for (const auto& name : ae_names) out << ',' << format_double(rec.adverse_events.at(name));
            out << ',' << csv_escape(at(rec.mesh_terms)) << ',' << csv_escape(at(rec.drugs)) << '\n';
        }
    }
}

void write_trials_csv(const std::filesystem::path& path, const std::vector<TrialRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    write_trials_csv(out, records);
}

std::vector<std::string> adverse_event_names(const std::vector<TrialRecord>& records) {
    std::vector<std::string> names;
    if (records.empty()) return names;
    for (const auto& [name, frac] : records.front().adverse_events) names.push_back(name);
    for (const auto& rec : records) {
        if (rec.adverse_events.size() != names.size() ||
            !std::equal(names.begin(), names.end(), rec.adverse_events.begin(),
                        [](const std::string& n, const auto& kv) { return n == kv.first; })) {
            throw DataError("trial " + rec.nct_id + " has a different adverse event set");
        }
    }
    return names;
}

} // namespace hetlink
