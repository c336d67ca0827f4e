#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "vizrec/dataset.hpp"
#include "vizrec/errors.hpp"

namespace vizrec {

inline constexpr std::string_view kVegaLiteSchema = "https://vega.github.io/schema/vega-lite/v5.json";

// Synthetic field carried by count aggregates.
inline constexpr std::string_view kCountField = "*";

enum class Mark { Bar, Point, Line, Tick, Area, Text };
enum class Channel { X, Y, Color, Size, Shape, Row, Column, Text };

inline constexpr std::array kAllMarks{Mark::Bar, Mark::Point, Mark::Line, Mark::Tick, Mark::Area, Mark::Text};
inline constexpr std::array kAllChannels{Channel::X,    Channel::Y,   Channel::Color,  Channel::Size,
                                         Channel::Shape, Channel::Row, Channel::Column, Channel::Text};

inline const char* to_string(Mark m) {
    switch (m) {
    case Mark::Bar: return "bar";
    case Mark::Point: return "point";
    case Mark::Line: return "line";
    case Mark::Tick: return "tick";
    case Mark::Area: return "area";
    case Mark::Text: return "text";
    }
    return "?";
}

inline const char* to_string(Channel c) {
    switch (c) {
    case Channel::X: return "x";
    case Channel::Y: return "y";
    case Channel::Color: return "color";
    case Channel::Size: return "size";
    case Channel::Shape: return "shape";
    case Channel::Row: return "row";
    case Channel::Column: return "column";
    case Channel::Text: return "text";
    }
    return "?";
}

inline std::optional<Mark> mark_from_string(std::string_view s) {
    for (Mark m : kAllMarks)
        if (s == to_string(m)) return m;
    return std::nullopt;
}

inline std::optional<Channel> channel_from_string(std::string_view s) {
    for (Channel c : kAllChannels)
        if (s == to_string(c)) return c;
    return std::nullopt;
}

inline bool is_positional(Channel c) { return c == Channel::X || c == Channel::Y; }

enum class TransformKind { Raw, Bin, Aggregate, Sort };
enum class AggregateOp { Count, Mean, Sum };
enum class SortOrder { Ascending, Descending };

struct Transformation {
    TransformKind kind = TransformKind::Raw;
    AggregateOp op = AggregateOp::Count;        // meaningful for Aggregate only
    SortOrder order = SortOrder::Ascending;     // meaningful for Sort only

    static constexpr Transformation raw() { return {}; }
    static constexpr Transformation bin() { return {TransformKind::Bin}; }
    static constexpr Transformation aggregate(AggregateOp op) { return {TransformKind::Aggregate, op}; }
    static constexpr Transformation count() { return aggregate(AggregateOp::Count); }
    static constexpr Transformation sort(SortOrder o) { return {TransformKind::Sort, AggregateOp::Count, o}; }

    bool is_aggregate() const { return kind == TransformKind::Aggregate; }
    bool is_count() const { return is_aggregate() && op == AggregateOp::Count; }

    auto operator<=>(const Transformation&) const = default;
};

inline std::string to_string(const Transformation& t) {
    switch (t.kind) {
    case TransformKind::Raw: return "raw";
    case TransformKind::Bin: return "bin";
    case TransformKind::Aggregate:
        return t.op == AggregateOp::Count ? "count" : t.op == AggregateOp::Mean ? "mean" : "sum";
    case TransformKind::Sort: return t.order == SortOrder::Ascending ? "sort-asc" : "sort-desc";
    }
    return "?";
}

inline std::optional<Transformation> transformation_from_string(std::string_view s) {
    if (s == "raw") return Transformation::raw();
    if (s == "bin") return Transformation::bin();
    if (s == "count") return Transformation::count();
    if (s == "mean") return Transformation::aggregate(AggregateOp::Mean);
    if (s == "sum") return Transformation::aggregate(AggregateOp::Sum);
    if (s == "sort-asc") return Transformation::sort(SortOrder::Ascending);
    if (s == "sort-desc") return Transformation::sort(SortOrder::Descending);
    return std::nullopt;
}

struct Encoding {
    Channel channel = Channel::X;
    std::string field;
    Transformation transform;

    bool is_count() const { return field == kCountField; }

    auto operator<=>(const Encoding&) const = default;
};

struct VisSpec {
    Mark mark = Mark::Point;
    std::vector<Encoding> encodings;

    const Encoding* find(Channel c) const {
        for (const auto& e : encodings)
            if (e.channel == c) return &e;
        return nullptr;
    }

    const Encoding* find_field(std::string_view field) const {
        for (const auto& e : encodings)
            if (e.field == field) return &e;
        return nullptr;
    }

    bool operator==(const VisSpec&) const = default;
};

inline constexpr std::size_t kMaxSpecAttributes = 3;

// Distinct dataset attributes referenced; the synthetic count field is excluded.
inline std::set<std::string> variable_set(const VisSpec& spec) {
    std::set<std::string> out;
    for (const auto& e : spec.encodings)
        if (!e.is_count()) out.insert(e.field);
    return out;
}

// Spec with encodings in (channel, field) order, plus an injective string key.
struct CanonicalSpec {
    VisSpec spec;
    std::string key;

    bool operator==(const CanonicalSpec& o) const { return key == o.key; }
    std::strong_ordering operator<=>(const CanonicalSpec& o) const { return key <=> o.key; }
};

namespace detail {

inline void append_escaped(std::string& out, std::string_view s) {
    for (char c : s) {
        if (c == '\\' || c == '(' || c == ')' || c == ',' || c == '=' || c == '[' || c == ']') out.push_back('\\');
        out.push_back(c);
    }
}

} // namespace detail

inline CanonicalSpec canonicalize(const VisSpec& spec) {
    CanonicalSpec c{spec, {}};
    std::sort(c.spec.encodings.begin(), c.spec.encodings.end(), [](const Encoding& a, const Encoding& b) {
        if (a.channel != b.channel) return a.channel < b.channel;
        return a.field < b.field;
    });
    c.key = to_string(c.spec.mark);
    c.key.push_back('(');
    bool first = true;
    for (const auto& e : c.spec.encodings) {
        if (!first) c.key.push_back(',');
        first = false;
        c.key += to_string(e.channel);
        c.key.push_back('=');
        detail::append_escaped(c.key, e.field);
        c.key.push_back('[');
        c.key += to_string(e.transform);
        c.key.push_back(']');
    }
    c.key.push_back(')');
    return c;
}

inline std::string canonical_key(const VisSpec& spec) { return canonicalize(spec).key; }

inline bool same_design(const VisSpec& a, const VisSpec& b) { return canonical_key(a) == canonical_key(b); }

inline bool transform_valid_for(const Transformation& t, FieldType type, bool is_count_field) {
    if (is_count_field) return t.is_count();
    switch (t.kind) {
    case TransformKind::Raw:
    case TransformKind::Sort: return true;
    case TransformKind::Bin: return type != FieldType::Nominal;
    case TransformKind::Aggregate: return t.op != AggregateOp::Count && type == FieldType::Quantitative;
    }
    return false;
}

// Count aggregates encode as quantitative.
inline bool channel_valid_for(Channel c, FieldType type, const Transformation& t) {
    switch (c) {
    case Channel::X:
    case Channel::Y:
    case Channel::Color:
    case Channel::Text: return true;
    case Channel::Size: return type == FieldType::Quantitative && t.kind != TransformKind::Bin;
    case Channel::Shape:
    case Channel::Row:
    case Channel::Column: return type == FieldType::Nominal;
    }
    return false;
}

inline FieldType encoding_type(const Encoding& e, const Dataset& ds) {
    return e.is_count() ? FieldType::Quantitative : ds.type_of(e.field);
}

// Structural validity of a spec against a dataset. Throws InvalidSpec.
inline void validate(const VisSpec& spec, const Dataset& ds) {
    std::set<Channel> channels;
    std::set<std::string> fields;
    for (const auto& e : spec.encodings) {
        if (!channels.insert(e.channel).second)
            throw InvalidSpec(std::string("channel ") + to_string(e.channel) + " used twice");
        if (!fields.insert(e.field).second) throw InvalidSpec("field '" + e.field + "' appears on two channels");
        if (!e.is_count() && !ds.find(e.field)) throw InvalidSpec("unknown field '" + e.field + "'");
        FieldType t = encoding_type(e, ds);
        if (!transform_valid_for(e.transform, t, e.is_count()))
            throw InvalidSpec("transform " + to_string(e.transform) + " invalid for field '" + e.field + "'");
        if (!channel_valid_for(e.channel, t, e.transform))
            throw InvalidSpec(std::string("channel ") + to_string(e.channel) + " invalid for field '" + e.field + "'");
    }
    auto vars = variable_set(spec);
    if (vars.size() > kMaxSpecAttributes) throw InvalidSpec("more than 3 attributes");
    if (vars.empty() && !(spec.encodings.size() == 1 && spec.encodings[0].is_count()))
        throw InvalidSpec("spec references no attributes");
    if (!spec.find(Channel::X)) throw InvalidSpec("spec has no x encoding");
}

inline bool is_valid(const VisSpec& spec, const Dataset& ds) {
    try {
        validate(spec, ds);
        return true;
    } catch (const InvalidSpec&) {
        return false;
    }
}

// Vega-Lite document. Field types come from `ds` when given; otherwise aggregated
// and binned encodings are quantitative and everything else nominal.
inline nlohmann::json serialize(const VisSpec& spec, std::string_view dataset_ref, const Dataset* ds = nullptr) {
    auto canon = canonicalize(spec).spec;
    nlohmann::json enc = nlohmann::json::object();
    for (const auto& e : canon.encodings) {
        nlohmann::json ch = nlohmann::json::object();
        FieldType type = FieldType::Nominal;
        if (e.is_count() || e.transform.is_aggregate() || e.transform.kind == TransformKind::Bin)
            type = FieldType::Quantitative;
        if (ds && !e.is_count()) {
            if (auto i = ds->find(e.field)) type = ds->fields()[*i].type;
        }
        if (e.is_count() || e.transform.is_aggregate()) type = FieldType::Quantitative;
        if (!e.is_count()) ch["field"] = e.field;
        ch["type"] = to_string(type);
        switch (e.transform.kind) {
        case TransformKind::Raw: break;
        case TransformKind::Bin: ch["bin"] = true; break;
        case TransformKind::Aggregate: ch["aggregate"] = to_string(e.transform); break;
        case TransformKind::Sort:
            ch["sort"] = e.transform.order == SortOrder::Ascending ? "ascending" : "descending";
            break;
        }
        enc[to_string(e.channel)] = std::move(ch);
    }
    return nlohmann::json{{"$schema", kVegaLiteSchema},
                          {"data", {{"name", dataset_ref}}},
                          {"mark", to_string(canon.mark)},
                          {"encoding", std::move(enc)}};
}

inline std::string serialize_string(const VisSpec& spec, std::string_view dataset_ref, const Dataset* ds = nullptr) {
    return serialize(spec, dataset_ref, ds).dump();
}

// Inverse of serialize(). Throws ParseError or UnsupportedChannel.
inline VisSpec parse_chart(const nlohmann::json& doc) {
    try {
        VisSpec spec;
        const auto& mark = doc.at("mark");
        auto mark_name = mark.is_object() ? mark.at("type").get<std::string>() : mark.get<std::string>();
        auto m = mark_from_string(mark_name);
        if (!m) throw ParseError("unknown mark '" + mark_name + "'");
        spec.mark = *m;
        for (const auto& [name, def] : doc.at("encoding").items()) {
            auto ch = channel_from_string(name);
            if (!ch) throw UnsupportedChannel("unsupported channel '" + name + "'");
            Encoding e;
            e.channel = *ch;
            if (def.contains("aggregate")) {
                auto agg = transformation_from_string(def.at("aggregate").get<std::string>());
                if (!agg || !agg->is_aggregate()) throw ParseError("unsupported aggregate");
                e.transform = *agg;
            } else if (def.contains("bin") && def.at("bin").is_boolean() && def.at("bin").get<bool>()) {
                e.transform = Transformation::bin();
            } else if (def.contains("sort") && def.at("sort").is_string()) {
                auto dir = def.at("sort").get<std::string>();
                if (dir != "ascending" && dir != "descending") throw ParseError("unsupported sort '" + dir + "'");
                e.transform = Transformation::sort(dir == "ascending" ? SortOrder::Ascending : SortOrder::Descending);
            }
            if (def.contains("field")) e.field = def.at("field").get<std::string>();
            else if (e.transform.is_count()) e.field = std::string(kCountField);
            else throw ParseError("encoding '" + name + "' has no field");
            spec.encodings.push_back(std::move(e));
        }
        return canonicalize(spec).spec;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed chart document: ") + e.what());
    }
}

inline VisSpec parse_chart(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed chart document: ") + e.what());
    }
    return parse_chart(doc);
}

inline VisSpec parse_chart(const std::string& text) { return parse_chart(std::string_view(text)); }

} // namespace vizrec
