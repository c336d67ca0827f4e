#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "vizrec/dataset.hpp"
#include "vizrec/design_space.hpp"
#include "vizrec/vizspec.hpp"

namespace vizrec {

// What a candidate may use. Transform options are matched by value, so
// Aggregate(Mean) and Aggregate(Sum) are separate entries.
struct EncodingConfig {
    std::vector<Channel> allowed_channels;
    std::vector<Transformation> allowed_transforms;
    std::vector<Mark> allowed_marks;

    bool allows(Channel c) const { return std::find(allowed_channels.begin(), allowed_channels.end(), c) != allowed_channels.end(); }
    bool allows(Mark m) const { return std::find(allowed_marks.begin(), allowed_marks.end(), m) != allowed_marks.end(); }
    bool allows(const Transformation& t) const {
        return std::find(allowed_transforms.begin(), allowed_transforms.end(), t) != allowed_transforms.end();
    }

    void validate() const {
        if (allowed_channels.empty() || allowed_transforms.empty() || allowed_marks.empty())
            throw InvalidArgument("encoding config sets must be non-empty");
        if (!allows(Channel::X)) throw InvalidArgument("encoding config must allow the x channel");
    }

    // True iff every encoding, transform and the mark are allowed.
    bool admits(const VisSpec& spec) const {
        if (!allows(spec.mark)) return false;
        return std::all_of(spec.encodings.begin(), spec.encodings.end(),
                           [&](const Encoding& e) { return allows(e.channel) && allows(e.transform); });
    }

    std::string fingerprint() const {
        std::string s;
        for (auto c : allowed_channels) s += std::string(to_string(c)) + ",";
        s += "|";
        for (const auto& t : allowed_transforms) s += to_string(t) + ",";
        s += "|";
        for (auto m : allowed_marks) s += std::string(to_string(m)) + ",";
        return s;
    }
};

// Every channel, transform and mark in the vocabulary.
inline EncodingConfig full_encoding_config() {
    return {{kAllChannels.begin(), kAllChannels.end()},
            {Transformation::raw(), Transformation::bin(), Transformation::count(),
             Transformation::aggregate(AggregateOp::Mean), Transformation::aggregate(AggregateOp::Sum),
             Transformation::sort(SortOrder::Ascending), Transformation::sort(SortOrder::Descending)},
            {kAllMarks.begin(), kAllMarks.end()}};
}

struct Score {
    double value = 0.0;
    std::vector<std::pair<std::string, double>> breakdown;

    void add(std::string rule, double contribution) {
        value += contribution;
        breakdown.emplace_back(std::move(rule), contribution);
    }
};

enum class StatFeature { Skew, Outliers, Correlation };

inline const char* to_string(StatFeature f) {
    switch (f) {
    case StatFeature::Skew: return "skew";
    case StatFeature::Outliers: return "outliers";
    case StatFeature::Correlation: return "correlation";
    }
    return "?";
}

struct OracleKind {
    enum class Kind { Effectiveness, DzibanHybrid, Statistical };
    Kind kind = Kind::Effectiveness;
    double lambda = 1.0;             // DzibanHybrid
    std::set<StatFeature> features;  // Statistical

    static OracleKind effectiveness() { return {}; }
    static OracleKind dziban(double lambda = 1.0) {
        if (!(lambda >= 0)) throw InvalidArgument("dziban lambda must be non-negative");
        return {Kind::DzibanHybrid, lambda, {}};
    }
    static OracleKind statistical(std::set<StatFeature> f = {StatFeature::Skew, StatFeature::Outliers, StatFeature::Correlation}) {
        return {Kind::Statistical, 1.0, std::move(f)};
    }
};

inline const char* to_string(OracleKind::Kind k) {
    switch (k) {
    case OracleKind::Kind::Effectiveness: return "effectiveness";
    case OracleKind::Kind::DzibanHybrid: return "dziban";
    case OracleKind::Kind::Statistical: return "statistical";
    }
    return "?";
}

// Channel weights, penalties and edit costs shared by all oracles.
struct OracleTables {
    std::map<std::pair<FieldType, Channel>, double> weights;

    std::size_t color_cardinality_limit = 10;
    double color_cardinality_penalty = 6;
    std::size_t shape_cardinality_limit = 6;
    double shape_cardinality_penalty = 4;
    std::size_t text_length_limit = 20;
    double text_length_penalty = 5;
    double mark_preference_penalty = 2;

    double cost_add_remove_field = 1.0;
    double cost_change_channel = 0.6;
    double cost_change_transform = 0.5;
    double cost_change_mark = 0.8;

    static OracleTables defaults() {
        using F = FieldType;
        using C = Channel;
        OracleTables t;
        t.weights = {
            {{F::Quantitative, C::X}, 10}, {{F::Quantitative, C::Y}, 10}, {{F::Quantitative, C::Size}, 6},
            {{F::Quantitative, C::Color}, 5}, {{F::Quantitative, C::Text}, 2},
            {{F::Nominal, C::X}, 10},      {{F::Nominal, C::Y}, 10},      {{F::Nominal, C::Color}, 7},
            {{F::Nominal, C::Row}, 6},     {{F::Nominal, C::Column}, 6},  {{F::Nominal, C::Shape}, 5},
            {{F::Nominal, C::Text}, 2},
            {{F::Temporal, C::X}, 10},     {{F::Temporal, C::Y}, 10},     {{F::Temporal, C::Color}, 4},
        };
        return t;
    }

    double weight(FieldType t, Channel c) const {
        auto it = weights.find({t, c});
        return it == weights.end() ? 0.0 : it->second;
    }

    // Multiplies every weight, penalty and edit cost by `factor` (> 0), which
    // scales every oracle score by the same factor. Limits are unchanged.
    OracleTables scaled(double factor) const {
        if (!(factor > 0)) throw InvalidArgument("scale factor must be positive");
        OracleTables t = *this;
        for (auto& [k, w] : t.weights) w *= factor;
        t.color_cardinality_penalty *= factor;
        t.shape_cardinality_penalty *= factor;
        t.text_length_penalty *= factor;
        t.mark_preference_penalty *= factor;
        t.cost_add_remove_field *= factor;
        t.cost_change_channel *= factor;
        t.cost_change_transform *= factor;
        t.cost_change_mark *= factor;
        return t;
    }

    nlohmann::json to_json() const {
        nlohmann::json w = nlohmann::json::object();
        for (const auto& [k, v] : weights) w[to_string(k.first)][to_string(k.second)] = v;
        return {{"weights", w},
                {"penalties",
                 {{"color_cardinality", {{"limit", color_cardinality_limit}, {"penalty", color_cardinality_penalty}}},
                  {"shape_cardinality", {{"limit", shape_cardinality_limit}, {"penalty", shape_cardinality_penalty}}},
                  {"text_length", {{"limit", text_length_limit}, {"penalty", text_length_penalty}}},
                  {"mark_preference", mark_preference_penalty}}},
                {"edit_costs",
                 {{"add_remove_field", cost_add_remove_field},
                  {"change_channel", cost_change_channel},
                  {"change_transform", cost_change_transform},
                  {"change_mark", cost_change_mark}}}};
    }

    // Missing keys keep their defaults.
    static OracleTables from_json(const nlohmann::json& j) {
        OracleTables t = defaults();
        try {
            if (j.contains("weights")) {
                t.weights.clear();
                for (const auto& [type_name, row] : j.at("weights").items()) {
                    std::optional<FieldType> type;
                    for (auto ft : {FieldType::Nominal, FieldType::Temporal, FieldType::Quantitative})
                        if (type_name == to_string(ft)) type = ft;
                    if (!type) throw ParseError("unknown field type '" + type_name + "' in weight table");
                    for (const auto& [ch_name, v] : row.items()) {
                        auto ch = channel_from_string(ch_name);
                        if (!ch) throw ParseError("unknown channel '" + ch_name + "' in weight table");
                        t.weights[{*type, *ch}] = v.get<double>();
                    }
                }
            }
            if (j.contains("penalties")) {
                const auto& p = j.at("penalties");
                auto read = [&](const char* key, std::size_t& limit, double& penalty) {
                    if (!p.contains(key)) return;
                    limit = p.at(key).value("limit", limit);
                    penalty = p.at(key).value("penalty", penalty);
                };
                read("color_cardinality", t.color_cardinality_limit, t.color_cardinality_penalty);
                read("shape_cardinality", t.shape_cardinality_limit, t.shape_cardinality_penalty);
                read("text_length", t.text_length_limit, t.text_length_penalty);
                t.mark_preference_penalty = p.value("mark_preference", t.mark_preference_penalty);
            }
            if (j.contains("edit_costs")) {
                const auto& c = j.at("edit_costs");
                t.cost_add_remove_field = c.value("add_remove_field", t.cost_add_remove_field);
                t.cost_change_channel = c.value("change_channel", t.cost_change_channel);
                t.cost_change_transform = c.value("change_transform", t.cost_change_transform);
                t.cost_change_mark = c.value("change_mark", t.cost_change_mark);
            }
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string("malformed oracle table: ") + e.what());
        }
        return t;
    }

    static OracleTables from_file(const std::filesystem::path& path) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open " + path.string());
        try {
            return from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(std::string("malformed oracle table: ") + e.what());
        }
    }
};

// ---------------------------------------------------------------------------
// Mark rules

enum class EncodingRole { Dimension, Measure, Aggregate };

inline EncodingRole role_of(const Encoding& e, FieldType type) {
    if (e.transform.is_aggregate()) return EncodingRole::Aggregate;
    if (type != FieldType::Quantitative || e.transform.kind == TransformKind::Bin) return EncodingRole::Dimension;
    return EncodingRole::Measure;
}

struct MarkRule {
    std::vector<Mark> compatible;  // in Mark order
    Mark preferred = Mark::Point;
};

// Aggregated specs group by their dimensions: with any aggregate present every
// other encoding must be a dimension and at least one dimension must exist.
// Binning only appears alongside an aggregate.
inline bool aggregation_consistent(const std::vector<Encoding>& encs, const std::vector<FieldType>& types) {
    bool has_agg = false, has_bin = false, has_measure = false, has_dim = false;
    for (std::size_t i = 0; i < encs.size(); ++i) {
        switch (role_of(encs[i], types[i])) {
        case EncodingRole::Aggregate: has_agg = true; break;
        case EncodingRole::Measure: has_measure = true; break;
        case EncodingRole::Dimension: has_dim = true; break;
        }
        if (encs[i].transform.kind == TransformKind::Bin) has_bin = true;
    }
    if (has_bin && !has_agg) return false;
    if (has_agg && (has_measure || !has_dim)) return false;
    return true;
}

// Compatible marks for a set of encodings, nullopt when none is.
//   N x Q-aggregate -> bar; T x Q-aggregate -> line; Q x Q raw -> point;
//   single Q -> bar over bin + count; single N -> bar over count.
inline std::optional<MarkRule> mark_rule(const std::vector<Encoding>& encs, const std::vector<FieldType>& types) {
    if (!aggregation_consistent(encs, types)) return std::nullopt;
    const Encoding* x = nullptr;
    const Encoding* y = nullptr;
    FieldType xt{}, yt{};
    bool has_size_or_shape = false, has_text = false;
    for (std::size_t i = 0; i < encs.size(); ++i) {
        switch (encs[i].channel) {
        case Channel::X: x = &encs[i]; xt = types[i]; break;
        case Channel::Y: y = &encs[i]; yt = types[i]; break;
        case Channel::Size:
        case Channel::Shape: has_size_or_shape = true; break;
        case Channel::Text: has_text = true; break;
        default: break;
        }
    }
    if (!x) return std::nullopt;
    bool has_agg = std::any_of(encs.begin(), encs.end(), [](const Encoding& e) { return e.transform.is_aggregate(); });

    MarkRule rule;
    using M = Mark;
    using R = EncodingRole;
    auto set = [&](std::vector<Mark> marks, Mark pref) {
        rule.compatible = std::move(marks);
        rule.preferred = pref;
    };
    R xr = role_of(*x, xt);
    if (!y) {
        if (xr == R::Measure) set({M::Point, M::Tick}, M::Tick);
        else if (xr == R::Aggregate) set({M::Bar, M::Point}, M::Bar);
        else if (has_agg) set({M::Point}, M::Point);
        else set({M::Point, M::Tick}, M::Point);
    } else {
        R yr = role_of(*y, yt);
        if ((xr == R::Aggregate) != (yr == R::Aggregate) && (xr == R::Dimension || yr == R::Dimension)) {
            const Encoding& dim = xr == R::Dimension ? *x : *y;
            FieldType dt = xr == R::Dimension ? xt : yt;
            if (dt == FieldType::Temporal) set({M::Bar, M::Point, M::Line, M::Area}, M::Line);
            else if (dim.transform.kind == TransformKind::Bin) set({M::Bar, M::Point, M::Line, M::Area}, M::Bar);
            else set({M::Bar, M::Point}, M::Bar);
        } else if ((xr == R::Measure) != (yr == R::Measure) && (xr == R::Dimension || yr == R::Dimension)) {
            FieldType dt = xr == R::Dimension ? xt : yt;
            if (dt == FieldType::Temporal) set({M::Point, M::Line}, M::Point);
            else set({M::Point, M::Tick}, M::Tick);
        } else {
            set({M::Point}, M::Point);
        }
    }
    if (has_text) {
        rule.compatible = {M::Text};
        rule.preferred = M::Text;
    } else if (has_size_or_shape) {
        rule.compatible = {M::Point};
        rule.preferred = M::Point;
    }
    return rule;
}

inline std::optional<MarkRule> mark_rule(const VisSpec& spec, const Dataset& ds) {
    std::vector<FieldType> types;
    for (const auto& e : spec.encodings) types.push_back(encoding_type(e, ds));
    return mark_rule(spec.encodings, types);
}

// ---------------------------------------------------------------------------
// Candidate enumeration

// All valid specs over exactly `attrs`: attributes (plus an optional count)
// assigned to distinct allowed channels, with type-valid transforms and every
// compatible allowed mark. Order: count-free first, then transform combinations
// in config order, channel assignments in channel order, marks in mark order.
inline std::vector<VisSpec> enumerate_candidates(const std::vector<std::string>& attrs, const Dataset& ds,
                                                 const EncodingConfig& config) {
    config.validate();
    if (attrs.empty() || attrs.size() > kMaxSpecAttributes)
        throw NoValidSpec("candidate nodes hold 1 to 3 attributes, got " + std::to_string(attrs.size()));

    std::vector<Channel> channels;
    for (Channel c : kAllChannels)
        if (config.allows(c)) channels.push_back(c);

    std::vector<VisSpec> out;
    std::unordered_set<std::string> seen;

    const bool count_allowed = config.allows(Transformation::count());
    for (int with_count = 0; with_count <= (count_allowed ? 1 : 0); ++with_count) {
        std::vector<std::string> fields(attrs.begin(), attrs.end());
        std::vector<FieldType> types;
        std::vector<std::vector<Transformation>> options;
        for (const auto& a : attrs) {
            FieldType t = ds.type_of(a);
            types.push_back(t);
            std::vector<Transformation> opts;
            for (const auto& tr : config.allowed_transforms)
                if (!tr.is_count() && transform_valid_for(tr, t, false)) opts.push_back(tr);
            options.push_back(std::move(opts));
        }
        if (with_count) {
            fields.emplace_back(kCountField);
            types.push_back(FieldType::Quantitative);
            options.push_back({Transformation::count()});
        }
        const std::size_t k = fields.size();
        if (k > channels.size()) continue;
        if (std::any_of(options.begin(), options.end(), [](const auto& o) { return o.empty(); })) continue;

        std::vector<std::size_t> choice(k, 0);
        std::vector<Encoding> encs(k);
        std::vector<bool> used(channels.size(), false);
        std::function<void(std::size_t)> assign = [&](std::size_t i) {
            if (i == k) {
                auto rule = mark_rule(encs, types);
                if (!rule) return;
                for (Mark m : rule->compatible) {
                    if (!config.allows(m)) continue;
                    VisSpec spec{m, encs};
                    if (seen.insert(canonical_key(spec)).second) out.push_back(std::move(spec));
                }
                return;
            }
            for (std::size_t c = 0; c < channels.size(); ++c) {
                if (used[c] || !channel_valid_for(channels[c], types[i], encs[i].transform)) continue;
                used[c] = true;
                encs[i].channel = channels[c];
                assign(i + 1);
                used[c] = false;
            }
        };
        for (bool done = false; !done;) {
            for (std::size_t i = 0; i < k; ++i) encs[i] = {Channel::X, fields[i], options[i][choice[i]]};
            if (aggregation_consistent(encs, types)) assign(0);
            // odometer over transform choices
            std::size_t pos = k;
            while (true) {
                if (pos == 0) {
                    done = true;
                    break;
                }
                --pos;
                if (++choice[pos] < options[pos].size()) break;
                choice[pos] = 0;
            }
        }
    }
    if (out.empty()) throw NoValidSpec("no valid spec for the given attributes under this encoding config");
    return out;
}

inline std::vector<VisSpec> enumerate_candidates(const DesignGraph& g, NodeId node, const Dataset& ds,
                                                 const EncodingConfig& config) {
    g.require(node);
    return enumerate_candidates(g.names(node), ds, config);
}

// ---------------------------------------------------------------------------
// Scoring

inline Score effectiveness_score(const VisSpec& spec, const Dataset& ds, const OracleTables& tables = OracleTables::defaults()) {
    Score s;
    for (const auto& e : spec.encodings) {
        FieldType t = encoding_type(e, ds);
        s.add(std::string("weight:") + to_string(t) + ":" + to_string(e.channel), tables.weight(t, e.channel));
        if (e.is_count()) continue;
        const auto& st = ds.stats(e.field);
        if (e.channel == Channel::Color && t == FieldType::Nominal && st.cardinality > tables.color_cardinality_limit)
            s.add("penalty:color-cardinality", -tables.color_cardinality_penalty);
        if (e.channel == Channel::Shape && st.cardinality > tables.shape_cardinality_limit)
            s.add("penalty:shape-cardinality", -tables.shape_cardinality_penalty);
        if (spec.mark == Mark::Text && e.channel == Channel::Text && st.max_text_length > tables.text_length_limit)
            s.add("penalty:text-length", -tables.text_length_penalty);
    }
    if (auto rule = mark_rule(spec, ds); rule && spec.mark != rule->preferred)
        s.add("penalty:mark-preference", -tables.mark_preference_penalty);
    return s;
}

// Edit cost under the table's costs; fields are matched by name. Edits are
// counted per kind before weighting so the result is exactly symmetric.
inline double perceptual_distance(const VisSpec& a, const VisSpec& b, const OracleTables& tables = OracleTables::defaults()) {
    std::size_t fields = 0, channels = 0, transforms = 0;
    for (const auto& ea : a.encodings) {
        const Encoding* eb = b.find_field(ea.field);
        if (!eb) {
            ++fields;
            continue;
        }
        if (ea.channel != eb->channel) ++channels;
        if (ea.transform != eb->transform) ++transforms;
    }
    for (const auto& eb : b.encodings)
        if (!a.find_field(eb.field)) ++fields;
    double d = a.mark != b.mark ? tables.cost_change_mark : 0.0;
    d += static_cast<double>(fields) * tables.cost_add_remove_field;
    d += static_cast<double>(channels) * tables.cost_change_channel;
    d += static_cast<double>(transforms) * tables.cost_change_transform;
    return d;
}

inline Score dziban_score(const VisSpec& spec, const VisSpec& anchor, const Dataset& ds, double lambda,
                          const OracleTables& tables = OracleTables::defaults()) {
    if (!(lambda >= 0)) throw InvalidArgument("dziban lambda must be non-negative");
    Score s = effectiveness_score(spec, ds, tables);
    s.add("perceptual-distance", -lambda * perceptual_distance(spec, anchor, tables));
    return s;
}

inline Score statistical_score(const VisSpec& spec, const Dataset& ds, const std::set<StatFeature>& features) {
    std::vector<std::size_t> quant;
    for (std::size_t i = 0; i < ds.field_count(); ++i)
        if (ds.fields()[i].type == FieldType::Quantitative && spec.find_field(ds.fields()[i].name)) quant.push_back(i);
    Score s;
    for (StatFeature f : features) {
        double v = 0;
        switch (f) {
        case StatFeature::Skew:
            for (auto i : quant) {
                double sk = std::abs(ds.stats(i).skewness);
                v = std::max(v, sk / (1.0 + sk));
            }
            break;
        case StatFeature::Outliers:
            for (auto i : quant)
                v = std::max(v, static_cast<double>(ds.stats(i).outlier_count) / static_cast<double>(ds.row_count()));
            break;
        case StatFeature::Correlation:
            if (quant.size() >= 2) v = std::abs(pearson(ds, quant[0], quant[1]));
            break;
        }
        s.add(std::string("feature:") + to_string(f), v);
    }
    return s;
}

// Score under `oracle`; DzibanHybrid without an anchor is pure effectiveness.
inline Score oracle_score(const VisSpec& spec, const OracleKind& oracle, const VisSpec* anchor, const Dataset& ds,
                          const OracleTables& tables = OracleTables::defaults()) {
    switch (oracle.kind) {
    case OracleKind::Kind::Effectiveness: return effectiveness_score(spec, ds, tables);
    case OracleKind::Kind::DzibanHybrid:
        return anchor ? dziban_score(spec, *anchor, ds, oracle.lambda, tables) : effectiveness_score(spec, ds, tables);
    case OracleKind::Kind::Statistical: return statistical_score(spec, ds, oracle.features);
    }
    return {};
}

struct RankedSpec {
    VisSpec spec;
    Score score;
    std::string key; // canonical key
};

// Scores are sums of table entries; values within rounding error of each
// other are equal for ranking purposes.
inline bool score_above(double a, double b) {
    return a - b > 1e-9 * std::max(std::abs(a), std::abs(b));
}

inline bool scores_tie(double a, double b) { return !score_above(a, b) && !score_above(b, a); }

// Descending score, ties by canonical key.
inline bool ranks_before(const RankedSpec& a, const RankedSpec& b) {
    if (!scores_tie(a.score.value, b.score.value)) return a.score.value > b.score.value;
    return a.key < b.key;
}

inline std::vector<RankedSpec> rank(const std::vector<VisSpec>& candidates, const OracleKind& oracle,
                                    const std::optional<VisSpec>& anchor, const Dataset& ds,
                                    const OracleTables& tables = OracleTables::defaults()) {
    std::vector<RankedSpec> out;
    out.reserve(candidates.size());
    // statistical scores depend only on the variable set
    std::map<std::set<std::string>, Score> stat_cache;
    for (const auto& c : candidates) {
        Score s;
        if (oracle.kind == OracleKind::Kind::Statistical) {
            auto vars = variable_set(c);
            auto it = stat_cache.find(vars);
            if (it == stat_cache.end()) it = stat_cache.emplace(vars, statistical_score(c, ds, oracle.features)).first;
            s = it->second;
        } else {
            s = oracle_score(c, oracle, anchor ? &*anchor : nullptr, ds, tables);
        }
        out.push_back({c, std::move(s), canonical_key(c)});
    }
    std::stable_sort(out.begin(), out.end(), ranks_before);
    return out;
}

} // namespace vizrec
