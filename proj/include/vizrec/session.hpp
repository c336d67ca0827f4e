#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "vizrec/recommender.hpp"

namespace vizrec {

// Hovers at or above this many milliseconds count as interactions.
inline constexpr std::int64_t kHoverThresholdMs = 500;

enum class EventKind { Exposed, SelectField, DeselectField, Specify, Bookmark, Unbookmark, Hover, LoadMore };

inline const char* to_string(EventKind k) {
    switch (k) {
    case EventKind::Exposed: return "exposed";
    case EventKind::SelectField: return "select_field";
    case EventKind::DeselectField: return "deselect_field";
    case EventKind::Specify: return "specify";
    case EventKind::Bookmark: return "bookmark";
    case EventKind::Unbookmark: return "unbookmark";
    case EventKind::Hover: return "hover";
    case EventKind::LoadMore: return "load_more";
    }
    return "?";
}

inline std::optional<EventKind> event_kind_from_string(std::string_view s) {
    for (auto k : {EventKind::Exposed, EventKind::SelectField, EventKind::DeselectField, EventKind::Specify,
                   EventKind::Bookmark, EventKind::Unbookmark, EventKind::Hover, EventKind::LoadMore})
        if (s == to_string(k)) return k;
    return std::nullopt;
}

struct InteractionEvent {
    std::int64_t timestamp_ms = 0;
    EventKind kind = EventKind::Exposed;
    std::optional<VisSpec> spec;          // canonical
    std::vector<std::string> node;        // variable set of `spec`, field order
    std::optional<std::string> field;     // SelectField / DeselectField
    std::optional<std::int64_t> duration_ms; // Hover

    bool operator==(const InteractionEvent&) const = default;
};

using InteractionLog = std::vector<InteractionEvent>;

inline nlohmann::json event_to_json(const InteractionEvent& e, std::string_view dataset_ref, const Dataset* ds = nullptr) {
    nlohmann::json j{{"t", e.timestamp_ms}, {"kind", to_string(e.kind)}};
    if (e.spec) j["spec"] = serialize(*e.spec, dataset_ref, ds);
    if (!e.node.empty()) j["node"] = e.node;
    if (e.field) j["field"] = *e.field;
    if (e.duration_ms) j["duration_ms"] = *e.duration_ms;
    return j;
}

inline InteractionEvent event_from_json(const nlohmann::json& j) {
    try {
        InteractionEvent e;
        e.timestamp_ms = j.at("t").get<std::int64_t>();
        auto kind = event_kind_from_string(j.at("kind").get<std::string>());
        if (!kind) throw MalformedLog("unknown event kind " + j.at("kind").dump());
        e.kind = *kind;
        if (j.contains("spec")) e.spec = parse_chart(j.at("spec"));
        if (j.contains("node")) e.node = j.at("node").get<std::vector<std::string>>();
        if (j.contains("field")) e.field = j.at("field").get<std::string>();
        if (j.contains("duration_ms")) e.duration_ms = j.at("duration_ms").get<std::int64_t>();
        if (e.kind == EventKind::Exposed && !e.spec) throw MalformedLog("exposed event without a spec");
        if (e.kind == EventKind::Hover && (!e.duration_ms || *e.duration_ms < 0))
            throw MalformedLog("hover event without a non-negative duration");
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw MalformedLog(std::string("malformed event: ") + ex.what());
    } catch (const ParseError& ex) {
        throw MalformedLog(std::string("malformed event spec: ") + ex.what());
    }
}

// One JSON object per line, in log order.
inline std::string export_ndjson(const InteractionLog& log, std::string_view dataset_ref, const Dataset* ds = nullptr) {
    std::string out;
    for (const auto& e : log) {
        out += event_to_json(e, dataset_ref, ds).dump();
        out.push_back('\n');
    }
    return out;
}

inline InteractionLog parse_ndjson(std::string_view text) {
    InteractionLog log;
    std::size_t line_no = 0;
    while (!text.empty()) {
        auto nl = text.find('\n');
        auto line = detail::trim(text.substr(0, nl));
        text.remove_prefix(nl == std::string_view::npos ? text.size() : nl + 1);
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line.begin(), line.end());
        } catch (const nlohmann::json::exception& ex) {
            throw MalformedLog("line " + std::to_string(line_no) + ": " + ex.what());
        }
        log.push_back(event_from_json(j));
    }
    return log;
}

using Clock = std::function<std::int64_t()>;

inline Clock system_clock_ms() {
    return [] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
            .count();
    };
}

// Shared, read-only registry of datasets and their recommendation engines.
class Catalog {
public:
    void add(std::shared_ptr<const Dataset> ds, OracleTables tables = OracleTables::defaults()) {
        std::unique_lock lock(mutex_);
        auto name = ds->name();
        engines_[name] = std::make_shared<Recommender>(std::move(ds), std::move(tables));
    }

    std::shared_ptr<const Recommender> engine(const std::string& dataset) const {
        std::shared_lock lock(mutex_);
        auto it = engines_.find(dataset);
        if (it == engines_.end()) throw UnknownDataset("unknown dataset '" + dataset + "'");
        return it->second;
    }

    std::vector<std::string> names() const {
        std::shared_lock lock(mutex_);
        std::vector<std::string> out;
        for (const auto& [k, v] : engines_) out.push_back(k);
        return out;
    }

private:
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<const Recommender>> engines_;
};

// Loads every .csv and .json table in `dir`; names are file stems.
inline std::shared_ptr<Catalog> load_catalog(const std::filesystem::path& dir) {
    auto catalog = std::make_shared<Catalog>();
    if (!std::filesystem::is_directory(dir)) throw UnknownDataset("data directory not found: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        auto ext = entry.path().extension();
        if (entry.is_regular_file() && (ext == ".csv" || ext == ".json")) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) catalog->add(std::make_shared<const Dataset>(load_table_file(f)));
    return catalog;
}

// What the interface shows for a session.
struct Views {
    std::string session;
    std::string dataset;
    std::string algorithm;
    std::vector<std::string> selection; // field order
    std::optional<VisSpec> specified;
    std::vector<RecommendationItem> related; // every loaded page
    std::size_t page_index = 0;
    bool has_more = false;
    std::vector<VisSpec> bookmarks;
};

inline nlohmann::json views_to_json(const Views& v, const Dataset* ds = nullptr) {
    nlohmann::json related = nlohmann::json::array();
    for (const auto& item : v.related) {
        std::vector<std::string> node;
        for (const auto& f : variable_set(item.spec)) node.push_back(f);
        related.push_back({{"chart", serialize(item.spec, v.dataset, ds)}, {"score", item.score.value}, {"node", node}});
    }
    nlohmann::json bookmarks = nlohmann::json::array();
    for (const auto& b : v.bookmarks) bookmarks.push_back(serialize(b, v.dataset, ds));
    return {{"session", v.session},
            {"dataset", v.dataset},
            {"algorithm", v.algorithm},
            {"selection", v.selection},
            {"specified", v.specified ? serialize(*v.specified, v.dataset, ds) : nlohmann::json(nullptr)},
            {"related", std::move(related)},
            {"page_index", v.page_index},
            {"has_more", v.has_more},
            {"bookmarks", std::move(bookmarks)}};
}

// In-memory exploration sessions. Each session is guarded by its own mutex;
// the catalog and engines are shared read-only.
class SessionService {
public:
    explicit SessionService(std::shared_ptr<const Catalog> catalog, Clock clock = system_clock_ms())
        : catalog_(std::move(catalog)), clock_(std::move(clock)) {}

    const Catalog& catalog() const { return *catalog_; }

    std::string create_session(const std::string& dataset, const std::string& algorithm) {
        auto engine = catalog_->engine(dataset);
        auto config = preset(algorithm);
        auto s = std::make_shared<Slot>();
        s->engine = std::move(engine);
        s->config = std::move(config);
        {
            std::unique_lock lock(map_mutex_);
            s->id = "s" + std::to_string(++next_id_);
            sessions_[s->id] = s;
        }
        std::lock_guard lock(s->mutex);
        refresh(*s, /*recompute_specified=*/true);
        return s->id;
    }

    Views toggle_field(const std::string& id, const std::string& field) {
        auto s = slot(id);
        std::lock_guard lock(s->mutex);
        const auto& ds = s->engine->dataset();
        if (!ds.find(field)) throw UnknownField("unknown field '" + field + "'");
        if (s->selection.count(field)) {
            s->selection.erase(field);
            append(*s, {.kind = EventKind::DeselectField, .field = field});
        } else {
            if (s->selection.size() >= s->config.attr_limit())
                throw CapExceeded("selection already holds " + std::to_string(s->selection.size()) + " attributes");
            s->selection.insert(field);
            append(*s, {.kind = EventKind::SelectField, .field = field});
        }
        refresh(*s, true);
        return views_locked(*s);
    }

    Views promote(const std::string& id, const VisSpec& spec) {
        auto s = slot(id);
        std::lock_guard lock(s->mutex);
        auto canon = require_exposed(*s, spec);
        s->selection = variable_set(canon);
        s->specified = canon;
        append(*s, interaction(*s, EventKind::Specify, canon));
        refresh(*s, false);
        return views_locked(*s);
    }

    // Toggles the bookmark; returns whether the spec is bookmarked afterwards.
    bool bookmark(const std::string& id, const VisSpec& spec) {
        auto s = slot(id);
        std::lock_guard lock(s->mutex);
        auto canon = require_exposed(*s, spec);
        auto key = canonical_key(canon);
        auto it = std::find_if(s->bookmarks.begin(), s->bookmarks.end(),
                               [&](const VisSpec& b) { return canonical_key(b) == key; });
        if (it != s->bookmarks.end()) {
            s->bookmarks.erase(it);
            append(*s, interaction(*s, EventKind::Unbookmark, canon));
            return false;
        }
        s->bookmarks.push_back(canon);
        append(*s, interaction(*s, EventKind::Bookmark, canon));
        return true;
    }

    void hover(const std::string& id, const VisSpec& spec, std::int64_t duration_ms) {
        if (duration_ms < 0) throw InvalidArgument("hover duration must be non-negative");
        auto s = slot(id);
        std::lock_guard lock(s->mutex);
        auto canon = require_exposed(*s, spec);
        auto e = interaction(*s, EventKind::Hover, canon);
        e.duration_ms = duration_ms;
        append(*s, std::move(e));
    }

    RecommendationPage load_more(const std::string& id) {
        auto s = slot(id);
        std::lock_guard lock(s->mutex);
        auto page = s->engine->related_views(s->specified, s->config, s->page_index + 1);
        s->page_index = page.page_index;
        s->has_more = page.has_more;
        append(*s, {.kind = EventKind::LoadMore});
        for (const auto& item : page.items) {
            expose(*s, item.spec);
            s->related.push_back(item);
        }
        return page;
    }

    Views views(const std::string& id) const {
        auto s = slot(id);
        std::lock_guard lock(s->mutex);
        return views_locked(*s);
    }

    InteractionLog log(const std::string& id) const {
        auto s = slot(id);
        std::lock_guard lock(s->mutex);
        return s->log;
    }

    std::string export_log(const std::string& id) const {
        auto s = slot(id);
        std::lock_guard lock(s->mutex);
        return export_ndjson(s->log, s->engine->dataset().name(), &s->engine->dataset());
    }

    const Dataset& dataset_of(const std::string& id) const { return slot(id)->engine->dataset(); }

    // Rebuilds a session by re-applying the user actions recorded in `log`.
    std::string replay(const std::string& dataset, const std::string& algorithm, const InteractionLog& log) {
        auto id = create_session(dataset, algorithm);
        for (const auto& e : log) {
            switch (e.kind) {
            case EventKind::SelectField:
            case EventKind::DeselectField: toggle_field(id, e.field.value()); break;
            case EventKind::Specify: promote(id, e.spec.value()); break;
            case EventKind::Bookmark:
            case EventKind::Unbookmark: bookmark(id, e.spec.value()); break;
            case EventKind::Hover: hover(id, e.spec.value(), e.duration_ms.value_or(0)); break;
            case EventKind::LoadMore: load_more(id); break;
            case EventKind::Exposed: break;
            }
        }
        return id;
    }

private:
    struct Slot {
        std::string id;
        std::shared_ptr<const Recommender> engine;
        AlgorithmConfig config;
        mutable std::mutex mutex;
        std::set<std::string> selection;
        std::optional<VisSpec> specified;
        std::vector<RecommendationItem> related;
        std::size_t page_index = 0;
        bool has_more = false;
        std::vector<VisSpec> bookmarks;
        InteractionLog log;
        std::unordered_set<std::string> exposed;
    };

    std::shared_ptr<Slot> slot(const std::string& id) const {
        std::shared_lock lock(map_mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw UnknownSession("unknown session '" + id + "'");
        return it->second;
    }

    std::vector<std::string> node_names(const Slot& s, const VisSpec& spec) const {
        auto vars = variable_set(spec);
        std::vector<std::string> out;
        for (const auto& f : s.engine->dataset().fields())
            if (vars.count(f.name)) out.push_back(f.name);
        return out;
    }

    InteractionEvent interaction(const Slot& s, EventKind kind, const VisSpec& canon) const {
        return {.kind = kind, .spec = canon, .node = node_names(s, canon)};
    }

    void append(Slot& s, InteractionEvent e) {
        std::int64_t now = clock_();
        if (!s.log.empty()) now = std::max(now, s.log.back().timestamp_ms);
        e.timestamp_ms = now;
        s.log.push_back(std::move(e));
    }

    void expose(Slot& s, const VisSpec& spec) {
        auto canon = canonicalize(spec);
        s.exposed.insert(canon.key);
        append(s, interaction(s, EventKind::Exposed, canon.spec));
    }

    VisSpec require_exposed(const Slot& s, const VisSpec& spec) const {
        auto canon = canonicalize(spec);
        if (!s.exposed.count(canon.key)) throw NotExposed("chart was never shown in this session: " + canon.key);
        return canon.spec;
    }

    void refresh(Slot& s, bool recompute_specified) {
        if (recompute_specified) {
            auto spec = s.engine->specified_view(s.selection, s.config);
            s.specified = spec ? std::optional<VisSpec>(canonicalize(*spec).spec) : std::nullopt;
        }
        auto page = s.engine->related_views(s.specified, s.config, 0);
        s.related = std::move(page.items);
        s.page_index = 0;
        s.has_more = page.has_more;
        if (s.specified) expose(s, *s.specified);
        for (const auto& item : s.related) expose(s, item.spec);
    }

    Views views_locked(const Slot& s) const {
        Views v;
        v.session = s.id;
        v.dataset = s.engine->dataset().name();
        v.algorithm = s.config.name;
        for (const auto& f : s.engine->dataset().fields())
            if (s.selection.count(f.name)) v.selection.push_back(f.name);
        v.specified = s.specified;
        v.related = s.related;
        v.page_index = s.page_index;
        v.has_more = s.has_more;
        v.bookmarks = s.bookmarks;
        return v;
    }

    std::shared_ptr<const Catalog> catalog_;
    Clock clock_;
    mutable std::shared_mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
    std::uint64_t next_id_ = 0;
};

} // namespace vizrec
