#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "vizrec/errors.hpp"

namespace vizrec {

enum class FieldType { Nominal, Temporal, Quantitative };

inline const char* to_string(FieldType t) {
    switch (t) {
    case FieldType::Nominal: return "nominal";
    case FieldType::Temporal: return "temporal";
    case FieldType::Quantitative: return "quantitative";
    }
    return "?";
}

struct Field {
    std::string name;
    FieldType type = FieldType::Nominal;

    bool operator==(const Field&) const = default;
};

// A missing cell is std::nullopt.
using Cell = std::optional<std::string>;
using Row = std::vector<Cell>;

struct FieldStats {
    std::size_t cardinality = 0;
    std::optional<double> min, max, mean, stddev; // quantitative only
    double skewness = 0.0;
    std::size_t outlier_count = 0;
    std::size_t missing_count = 0;
    std::size_t max_text_length = 0; // longest raw value, in bytes
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

inline std::optional<double> parse_number(std::string_view s) {
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    if (s.empty()) return std::nullopt;
    // from_chars accepts "inf"/"nan"; data cells never mean those
    char c = s.front() == '-' && s.size() > 1 ? s[1] : s.front();
    if (!(std::isdigit(static_cast<unsigned char>(c)) || c == '.')) return std::nullopt;
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

inline bool all_digits(std::string_view s, std::size_t n) {
    if (s.size() < n) return false;
    for (std::size_t i = 0; i < n; ++i)
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
    return true;
}

inline int to_int(std::string_view s) {
    int v = 0;
    std::from_chars(s.data(), s.data() + s.size(), v);
    return v;
}

inline bool valid_ymd(int y, int m, int d) {
    static constexpr std::array<int, 12> days{31, 29, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    return y >= 0 && m >= 1 && m <= 12 && d >= 1 && d <= days[static_cast<std::size_t>(m - 1)];
}

// YYYY[-MM[-DD[(T| )hh:mm[:ss[.f+]][Z|(+|-)hh[:]mm]]]]
inline bool parse_iso8601(std::string_view s) {
    if (!all_digits(s, 4)) return false;
    if (s.size() == 4) return true;
    if (s.size() < 7 || s[4] != '-' || !all_digits(s.substr(5), 2)) return false;
    int month = to_int(s.substr(5, 2));
    if (s.size() == 7) return month >= 1 && month <= 12;
    if (s.size() < 10 || s[7] != '-' || !all_digits(s.substr(8), 2)) return false;
    if (!valid_ymd(to_int(s.substr(0, 4)), month, to_int(s.substr(8, 2)))) return false;
    s.remove_prefix(10);
    if (s.empty()) return true;
    if (s.front() != 'T' && s.front() != ' ') return false;
    s.remove_prefix(1);
    if (s.size() < 5 || !all_digits(s, 2) || s[2] != ':' || !all_digits(s.substr(3), 2)) return false;
    if (to_int(s.substr(0, 2)) > 23 || to_int(s.substr(3, 2)) > 59) return false;
    s.remove_prefix(5);
    if (s.size() >= 3 && s[0] == ':') {
        if (!all_digits(s.substr(1), 2) || to_int(s.substr(1, 2)) > 60) return false;
        s.remove_prefix(3);
        if (!s.empty() && s[0] == '.') {
            s.remove_prefix(1);
            std::size_t n = 0;
            while (n < s.size() && std::isdigit(static_cast<unsigned char>(s[n]))) ++n;
            if (n == 0) return false;
            s.remove_prefix(n);
        }
    }
    if (s.empty() || s == "Z") return true;
    if (s[0] != '+' && s[0] != '-') return false;
    s.remove_prefix(1);
    if (s.size() == 5 && s[2] == ':') return all_digits(s, 2) && all_digits(s.substr(3), 2);
    return s.size() == 4 && all_digits(s, 4);
}

// "Jun 12 1998"
inline bool parse_month_day_year(std::string_view s) {
    static constexpr std::array<std::string_view, 12> months{
        "jan", "feb", "mar", "apr", "may", "jun", "jul", "aug", "sep", "oct", "nov", "dec"};
    if (s.size() < 10 || s[3] != ' ') return false;
    std::string mon;
    for (char c : s.substr(0, 3)) mon.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    auto it = std::find(months.begin(), months.end(), mon);
    if (it == months.end()) return false;
    s.remove_prefix(4);
    std::size_t sp = s.find(' ');
    if (sp == std::string_view::npos || sp == 0 || sp > 2 || !all_digits(s, sp)) return false;
    std::string_view year = s.substr(sp + 1);
    if (year.size() != 4 || !all_digits(year, 4)) return false;
    int month = static_cast<int>(it - months.begin()) + 1;
    return valid_ymd(to_int(year), month, to_int(s.substr(0, sp)));
}

inline bool parse_temporal(std::string_view s) {
    s = trim(s);
    return parse_iso8601(s) || parse_month_day_year(s);
}

inline bool is_missing(const Cell& c) { return !c || trim(*c).empty(); }

} // namespace detail

struct TypeInference {
    FieldType type = FieldType::Nominal;
    bool all_missing = false;
};

inline constexpr double kTypeInferenceThreshold = 0.95;

// Numbers are checked before dates, so bare 4-digit years infer as quantitative.
inline TypeInference infer_field_type(std::span<const Cell> values) {
    std::size_t present = 0, numeric = 0, temporal = 0;
    for (const auto& v : values) {
        if (detail::is_missing(v)) continue;
        ++present;
        if (detail::parse_number(*v)) ++numeric;
        if (detail::parse_temporal(*v)) ++temporal;
    }
    if (present == 0) return {FieldType::Nominal, true};
    auto share = [present](std::size_t k) { return static_cast<double>(k) / static_cast<double>(present); };
    if (share(numeric) >= kTypeInferenceThreshold) return {FieldType::Quantitative, false};
    if (share(temporal) >= kTypeInferenceThreshold) return {FieldType::Temporal, false};
    return {FieldType::Nominal, false};
}

inline TypeInference infer_field_type(const std::vector<std::string>& values) {
    std::vector<Cell> cells(values.begin(), values.end());
    return infer_field_type(std::span<const Cell>(cells));
}

namespace detail {

inline double quantile_sorted(const std::vector<double>& xs, double p) {
    // linear interpolation between closest ranks
    double h = (static_cast<double>(xs.size()) - 1.0) * p;
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (h - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

inline FieldStats compute_stats(const std::vector<Row>& rows, std::size_t col, FieldType type,
                                const std::vector<std::optional<double>>& numeric) {
    FieldStats st;
    std::unordered_set<std::string> distinct;
    for (const auto& row : rows) {
        const Cell& c = row[col];
        if (is_missing(c)) {
            ++st.missing_count;
            continue;
        }
        st.max_text_length = std::max(st.max_text_length, c->size());
        if (type != FieldType::Quantitative) distinct.insert(*c);
    }
    if (type != FieldType::Quantitative) {
        st.cardinality = distinct.size();
        return st;
    }

    std::vector<double> xs;
    xs.reserve(rows.size());
    for (const auto& v : numeric)
        if (v) xs.push_back(*v);
    // cells that are present but not numeric count as missing for numeric stats
    st.missing_count = rows.size() - xs.size();
    if (xs.empty()) return st;
    std::sort(xs.begin(), xs.end());
    st.cardinality = 1;
    for (std::size_t i = 1; i < xs.size(); ++i)
        if (xs[i] != xs[i - 1]) ++st.cardinality;
    const auto n = static_cast<double>(xs.size());
    st.min = xs.front();
    st.max = xs.back();
    double sum = 0;
    for (double x : xs) sum += x;
    double mean = sum / n;
    st.mean = mean;
    double m2 = 0, m3 = 0;
    for (double x : xs) {
        double d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    st.stddev = xs.size() > 1 ? std::sqrt(m2 / (n - 1.0)) : 0.0;
    m2 /= n;
    m3 /= n;
    if (st.cardinality > 1 && xs.size() > 2 && m2 > 0) {
        double g1 = m3 / std::pow(m2, 1.5);
        st.skewness = g1 * std::sqrt(n * (n - 1.0)) / (n - 2.0);
    }
    if (st.cardinality > 1) {
        double q1 = quantile_sorted(xs, 0.25), q3 = quantile_sorted(xs, 0.75);
        double iqr = q3 - q1;
        double lo = q1 - 1.5 * iqr, hi = q3 + 1.5 * iqr;
        for (double x : xs)
            if (x < lo || x > hi) ++st.outlier_count;
    }
    return st;
}

} // namespace detail

// Immutable typed table with exact per-field statistics.
class Dataset {
public:
    Dataset(std::string name, std::vector<Field> fields, std::vector<Row> rows)
        : name_(std::move(name)), fields_(std::move(fields)), rows_(std::move(rows)) {
        if (fields_.empty() || rows_.empty())
            throw EmptyDataset("dataset '" + name_ + "' has " + std::to_string(fields_.size()) + " fields and " +
                               std::to_string(rows_.size()) + " rows");
        for (std::size_t i = 0; i < fields_.size(); ++i) {
            if (!index_.emplace(fields_[i].name, i).second)
                throw ParseError("duplicate field name '" + fields_[i].name + "'");
        }
        for (const auto& row : rows_)
            if (row.size() != fields_.size()) throw ParseError("row width does not match field count");
        numeric_.resize(fields_.size());
        stats_.reserve(fields_.size());
        for (std::size_t i = 0; i < fields_.size(); ++i) {
            if (fields_[i].type == FieldType::Quantitative) {
                numeric_[i].reserve(rows_.size());
                for (const auto& row : rows_)
                    numeric_[i].push_back(detail::is_missing(row[i]) ? std::nullopt : detail::parse_number(*row[i]));
            }
            stats_.push_back(detail::compute_stats(rows_, i, fields_[i].type, numeric_[i]));
        }
    }

    // Infers each field's type from its column.
    static Dataset with_inferred_types(std::string name, std::vector<std::string> names, std::vector<Row> rows) {
        std::vector<Field> fields;
        fields.reserve(names.size());
        std::vector<Cell> column(rows.size());
        for (std::size_t i = 0; i < names.size(); ++i) {
            for (std::size_t r = 0; r < rows.size(); ++r) column[r] = i < rows[r].size() ? rows[r][i] : std::nullopt;
            fields.push_back({std::move(names[i]), infer_field_type(std::span<const Cell>(column)).type});
        }
        return Dataset(std::move(name), std::move(fields), std::move(rows));
    }

    const std::string& name() const { return name_; }
    const std::vector<Field>& fields() const { return fields_; }
    const std::vector<Row>& rows() const { return rows_; }
    std::size_t row_count() const { return rows_.size(); }
    std::size_t field_count() const { return fields_.size(); }

    std::optional<std::size_t> find(std::string_view field) const {
        auto it = index_.find(std::string(field));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t index_of(std::string_view field) const {
        if (auto i = find(field)) return *i;
        throw UnknownField("unknown field '" + std::string(field) + "' in dataset '" + name_ + "'");
    }

    const Field& field(std::string_view name) const { return fields_[index_of(name)]; }
    FieldType type_of(std::string_view name) const { return field(name).type; }
    const FieldStats& stats(std::string_view name) const { return stats_[index_of(name)]; }
    const FieldStats& stats(std::size_t index) const { return stats_.at(index); }

    // Parsed values of a quantitative column; empty for other types.
    const std::vector<std::optional<double>>& numeric_column(std::size_t index) const { return numeric_.at(index); }

private:
    std::string name_;
    std::vector<Field> fields_;
    std::vector<Row> rows_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::vector<std::optional<double>>> numeric_;
    std::vector<FieldStats> stats_;
};

inline const FieldStats& field_stats(const Dataset& ds, std::string_view field) { return ds.stats(field); }

// Pearson r over rows where both quantitative columns are present; 0 when undefined.
inline double pearson(const Dataset& ds, std::size_t a, std::size_t b) {
    const auto& xa = ds.numeric_column(a);
    const auto& xb = ds.numeric_column(b);
    if (xa.empty() || xb.empty()) return 0.0;
    double n = 0, sa = 0, sb = 0;
    for (std::size_t i = 0; i < xa.size(); ++i)
        if (xa[i] && xb[i]) {
            n += 1;
            sa += *xa[i];
            sb += *xb[i];
        }
    if (n < 2) return 0.0;
    double ma = sa / n, mb = sb / n, cov = 0, va = 0, vb = 0;
    for (std::size_t i = 0; i < xa.size(); ++i)
        if (xa[i] && xb[i]) {
            double da = *xa[i] - ma, db = *xb[i] - mb;
            cov += da * db;
            va += da * da;
            vb += db * db;
        }
    if (va <= 0 || vb <= 0) return 0.0;
    return std::clamp(cov / std::sqrt(va * vb), -1.0, 1.0);
}

enum class TableFormat { Csv, JsonRecords };

namespace detail {

// RFC 4180 with LF or CRLF line endings; the first record is the header.
inline std::vector<std::vector<Cell>> parse_csv(std::string_view in) {
    std::vector<std::vector<Cell>> records;
    std::vector<Cell> record;
    std::string cell;
    bool quoted = false, was_quoted = false, at_cell_start = true;
    auto end_cell = [&] {
        if (was_quoted || !trim(cell).empty()) record.emplace_back(cell);
        else record.emplace_back(std::nullopt);
        cell.clear();
        was_quoted = false;
        at_cell_start = true;
    };
    auto end_record = [&] {
        end_cell();
        if (!(record.size() == 1 && !record[0])) records.push_back(std::move(record));
        record.clear();
    };
    for (std::size_t i = 0; i < in.size(); ++i) {
        char c = in[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < in.size() && in[i + 1] == '"') {
                    cell.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cell.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            if (!at_cell_start) throw ParseError("unexpected quote inside unquoted CSV field");
            quoted = was_quoted = true;
            at_cell_start = false;
        } else if (c == ',') {
            end_cell();
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < in.size() && in[i + 1] == '\n') ++i;
            end_record();
        } else {
            if (was_quoted) throw ParseError("characters after closing quote in CSV field");
            cell.push_back(c);
            at_cell_start = false;
        }
    }
    if (quoted) throw ParseError("unterminated quoted CSV field");
    if (!cell.empty() || !record.empty() || was_quoted) end_record();
    return records;
}

inline Dataset load_csv(std::string_view bytes, std::string name) {
    auto records = parse_csv(bytes);
    if (records.empty()) throw EmptyDataset("CSV input has no header row");
    std::vector<std::string> names;
    for (auto& h : records.front()) {
        if (!h) throw ParseError("empty column name in CSV header");
        names.emplace_back(trim(*h));
    }
    std::vector<Row> rows;
    rows.reserve(records.size() - 1);
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != names.size())
            throw ParseError("CSV record " + std::to_string(r + 1) + " has " + std::to_string(records[r].size()) +
                             " fields, header has " + std::to_string(names.size()));
        rows.push_back(std::move(records[r]));
    }
    if (names.empty() || rows.empty()) throw EmptyDataset("CSV input has no fields or no rows");
    return Dataset::with_inferred_types(std::move(name), std::move(names), std::move(rows));
}

inline Cell json_cell(const nlohmann::ordered_json& v) {
    if (v.is_null()) return std::nullopt;
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return std::string(v.get<bool>() ? "true" : "false");
    if (v.is_number()) return v.dump();
    throw ParseError("nested values are not supported in JSON records");
}

inline Dataset load_json_records(std::string_view bytes, std::string name) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what());
    }
    if (!doc.is_array()) throw ParseError("JSON input must be an array of records");
    std::vector<std::string> names;
    std::unordered_map<std::string, std::size_t> index;
    for (const auto& rec : doc) {
        if (!rec.is_object()) throw ParseError("JSON record is not an object");
        for (const auto& [k, v] : rec.items())
            if (index.emplace(k, names.size()).second) names.push_back(k);
    }
    std::vector<Row> rows;
    rows.reserve(doc.size());
    for (const auto& rec : doc) {
        Row row(names.size());
        for (const auto& [k, v] : rec.items()) row[index.at(k)] = json_cell(v);
        rows.push_back(std::move(row));
    }
    if (names.empty() || rows.empty()) throw EmptyDataset("JSON input has no fields or no records");
    return Dataset::with_inferred_types(std::move(name), std::move(names), std::move(rows));
}

} // namespace detail

inline Dataset load_table(std::string_view bytes, TableFormat format, std::string name = "data") {
    return format == TableFormat::Csv ? detail::load_csv(bytes, std::move(name))
                                      : detail::load_json_records(bytes, std::move(name));
}

// Format from the extension (.csv or .json); dataset name is the file stem.
inline Dataset load_table_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    auto ext = path.extension().string();
    TableFormat fmt;
    if (ext == ".csv") fmt = TableFormat::Csv;
    else if (ext == ".json") fmt = TableFormat::JsonRecords;
    else throw ParseError("unrecognized table extension '" + ext + "'");
    return load_table(buf.str(), fmt, path.stem().string());
}

} // namespace vizrec
