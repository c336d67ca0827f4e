#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "vizrec/dataset.hpp"
#include "vizrec/design_space.hpp"
#include "vizrec/oracles.hpp"
#include "vizrec/traversal.hpp"
#include "vizrec/vizspec.hpp"

namespace vizrec {

// One recommendation algorithm: traversal x oracle x constraints.
struct AlgorithmConfig {
    std::string name;
    TraversalStrategy traversal;
    OracleKind oracle;
    EncodingConfig encoding_config;
    std::size_t max_attrs = 3;
    std::optional<std::size_t> max_inputs;
    std::size_t page_size = 5;
    std::size_t candidate_cap = 200;   // candidates ranked per visited node
    std::size_t per_node_limit = 3;    // specs surfaced per node in one query
    EnumerationScope::Mode scope = EnumerationScope::Mode::Hybrid;
    std::uint64_t seed = 0;            // random traversal

    std::optional<std::size_t> max_path() const {
        if (traversal.kind == TraversalStrategy::Kind::Bfs) return traversal.max_path;
        return std::nullopt;
    }

    // Largest selection the algorithm accepts.
    std::size_t attr_limit() const { return max_inputs ? std::min(max_attrs, *max_inputs) : max_attrs; }

    void validate() const {
        if (page_size < 1) throw InvalidArgument("page_size must be >= 1");
        if (max_attrs < 1 || max_attrs > kMaxSpecAttributes) throw InvalidArgument("max_attrs must be in [1, 3]");
        if (candidate_cap < 1 || per_node_limit < 1) throw InvalidArgument("candidate_cap and per_node_limit must be >= 1");
        encoding_config.validate();
    }
};

// Channels/transforms/marks of the Voyager-family presets: position, length,
// area, shape, color with aggregation and binning.
inline EncodingConfig voyager_encoding_config() {
    return {{Channel::X, Channel::Y, Channel::Color, Channel::Size, Channel::Shape},
            {Transformation::raw(), Transformation::bin(), Transformation::count(),
             Transformation::aggregate(AggregateOp::Mean), Transformation::aggregate(AggregateOp::Sum)},
            {Mark::Bar, Mark::Point, Mark::Line, Mark::Tick, Mark::Area}};
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"compassql-bfs", "compassql-dfs", "dziban-bfs",
                                                "dziban-dfs",    "foresight",     "random-baseline"};
    return names;
}

inline AlgorithmConfig preset(std::string_view name) {
    AlgorithmConfig c;
    c.name = std::string(name);
    c.encoding_config = voyager_encoding_config();
    if (name == "compassql-bfs" || name == "dziban-bfs") c.traversal = TraversalStrategy::bfs(1);
    else if (name == "compassql-dfs" || name == "dziban-dfs") c.traversal = TraversalStrategy::dfs();
    if (name == "compassql-bfs" || name == "compassql-dfs") {
        c.oracle = OracleKind::effectiveness();
    } else if (name == "dziban-bfs" || name == "dziban-dfs") {
        c.oracle = OracleKind::dziban(1.0);
    } else if (name == "foresight") {
        c.traversal = TraversalStrategy::cluster();
        c.oracle = OracleKind::statistical();
        c.max_inputs = 2;
        c.encoding_config = {{Channel::X, Channel::Y},
                             {Transformation::raw()},
                             {Mark::Bar, Mark::Point, Mark::Line, Mark::Tick}};
    } else if (name == "random-baseline") {
        c.traversal = TraversalStrategy::random(10);
        c.oracle = OracleKind::effectiveness();
    } else {
        throw UnknownPreset("unknown algorithm preset '" + std::string(name) + "'");
    }
    return c;
}

struct RecommendationItem {
    VisSpec spec;
    Score score;
    NodeId node;
    std::string key; // canonical key
};

struct RecommendationPage {
    std::optional<VisSpec> anchor;
    std::vector<RecommendationItem> items;
    std::size_t page_index = 0;
    bool has_more = false;
    std::size_t total = 0; // ranked items across all pages
};

// Recommendation engine over one dataset. Thread-safe: candidate lists are
// memoized per (node, encoding config, oracle) behind a mutex; everything else
// is computed per query.
class Recommender {
public:
    explicit Recommender(std::shared_ptr<const Dataset> ds, OracleTables tables = OracleTables::defaults())
        : ds_(std::move(ds)), tables_(std::move(tables)) {}

    const Dataset& dataset() const { return *ds_; }
    std::shared_ptr<const Dataset> dataset_ptr() const { return ds_; }
    const OracleTables& tables() const { return tables_; }

    DesignGraph graph(const AlgorithmConfig& config) const {
        return DesignGraph(ds_->fields(), std::min(config.max_attrs, ds_->field_count()), ds_->name());
    }

    std::optional<VisSpec> specified_view(const std::set<std::string>& selection, const AlgorithmConfig& config) const {
        config.validate();
        if (selection.empty()) return std::nullopt;
        if (selection.size() > config.attr_limit())
            throw TooManyAttributes("selection has " + std::to_string(selection.size()) + " attributes, limit is " +
                                    std::to_string(config.attr_limit()));
        auto g = graph(config);
        NodeId node = g.node(selection);
        auto base = base_candidates(g, node, config);
        if (base->empty()) return std::nullopt;
        return base->front().spec; // base lists are pre-sorted by the anchor-free score
    }

    // Full ranked list for a query, before pagination.
    std::vector<RecommendationItem> ranked_related(const std::optional<VisSpec>& anchor, const AlgorithmConfig& config) const {
        config.validate();
        auto g = graph(config);
        std::vector<RecommendationItem> all;

        if (!anchor) {
            for (NodeId n : g.nodes()) {
                if (n.size() != 1) break;
                auto base = base_candidates(g, n, config);
                if (!base->empty()) all.push_back({base->front().spec, base->front().score, n, base->front().key});
            }
            std::stable_sort(all.begin(), all.end(), item_before);
            return all;
        }

        validate(*anchor, *ds_);
        NodeId n0 = g.node(variable_set(*anchor));
        auto anchor_key = canonical_key(*anchor);
        std::uint64_t seed = config.seed ^ (n0.bits() * 0x9E3779B97F4A7C15ull);
        std::vector<NodeId> nodes;
        if (config.scope == EnumerationScope::Mode::VisualEncodingOnly) {
            nodes = apply_scope(g, EnumerationScope::visual_encoding_only(n0), {});
        } else {
            nodes = enumerate(g, n0, config.traversal, seed);
        }
        const std::size_t per_node =
            config.scope == EnumerationScope::Mode::DataQueryOnly ? 1 : config.per_node_limit;
        const bool hybrid = config.oracle.kind == OracleKind::Kind::DzibanHybrid;

        struct Scored {
            const RankedSpec* base;
            double value;
        };
        for (NodeId n : nodes) {
            if (n.size() > config.attr_limit() || !g.within_constraints(n, n0, config.max_path(), config.max_inputs))
                continue;
            auto base = base_candidates(g, n, config);
            std::vector<Scored> scored;
            scored.reserve(base->size());
            for (const auto& b : *base) {
                if (b.key == anchor_key) continue;
                double v = b.score.value;
                if (hybrid) v -= config.oracle.lambda * perceptual_distance(b.spec, *anchor, tables_);
                scored.push_back({&b, v});
            }
            auto k = std::min(per_node, scored.size());
            std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end(),
                              [](const Scored& a, const Scored& b) {
                                  if (!scores_tie(a.value, b.value)) return a.value > b.value;
                                  return a.base->key < b.base->key;
                              });
            for (std::size_t i = 0; i < k; ++i) {
                const auto& b = *scored[i].base;
                Score s = b.score;
                if (hybrid) s.add("perceptual-distance", -config.oracle.lambda * perceptual_distance(b.spec, *anchor, tables_));
                all.push_back({b.spec, std::move(s), n, b.key});
            }
        }
        std::stable_sort(all.begin(), all.end(), item_before);
        return all;
    }

    RecommendationPage related_views(const std::optional<VisSpec>& anchor, const AlgorithmConfig& config,
                                     std::size_t page) const {
        auto all = ranked_related(anchor, config);
        const std::size_t begin = page * config.page_size;
        if (page > 0 && begin >= all.size())
            throw InvalidPage("page " + std::to_string(page) + " is past the end (" + std::to_string(all.size()) +
                              " items)");
        RecommendationPage p;
        p.anchor = anchor;
        p.page_index = page;
        p.total = all.size();
        const std::size_t end = std::min(all.size(), begin + config.page_size);
        for (std::size_t i = begin; i < end; ++i) p.items.push_back(std::move(all[i]));
        p.has_more = end < all.size();
        return p;
    }

private:
    static bool item_before(const RecommendationItem& a, const RecommendationItem& b) {
        if (!scores_tie(a.score.value, b.score.value)) return a.score.value > b.score.value;
        return a.key < b.key;
    }

    // First `candidate_cap` candidates of a node, scored without an anchor and
    // sorted by that score. Dziban queries add the distance term on top.
    std::shared_ptr<const std::vector<RankedSpec>> base_candidates(const DesignGraph& g, NodeId node,
                                                                   const AlgorithmConfig& config) const {
        OracleKind base_oracle = config.oracle.kind == OracleKind::Kind::DzibanHybrid ? OracleKind::effectiveness()
                                                                                       : config.oracle;
        std::string key = std::to_string(node.bits()) + "/" + config.encoding_config.fingerprint() + "/" +
                          to_string(base_oracle.kind) + "/" + std::to_string(config.candidate_cap);
        for (auto f : base_oracle.features) key += std::string("/") + to_string(f);
        {
            std::lock_guard lock(mutex_);
            if (auto it = cache_.find(key); it != cache_.end()) return it->second;
        }
        std::vector<VisSpec> cands;
        try {
            cands = enumerate_candidates(g, node, *ds_, config.encoding_config);
        } catch (const NoValidSpec&) {
        }
        if (cands.size() > config.candidate_cap) cands.resize(config.candidate_cap);
        auto ranked = std::make_shared<const std::vector<RankedSpec>>(rank(cands, base_oracle, std::nullopt, *ds_, tables_));
        std::lock_guard lock(mutex_);
        return cache_.emplace(key, std::move(ranked)).first->second;
    }

    std::shared_ptr<const Dataset> ds_;
    OracleTables tables_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::string, std::shared_ptr<const std::vector<RankedSpec>>> cache_;
};

} // namespace vizrec
