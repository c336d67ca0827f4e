#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <deque>
#include <map>
#include <random>
#include <unordered_set>
#include <vector>

#include "vizrec/design_space.hpp"

namespace vizrec {

// Multiset of field types, stored as counts indexed by FieldType.
using TypeSignature = std::array<std::size_t, 3>;

struct ClusterCriteria {
    enum class Signature { FieldTypeMultiset };
    Signature signature = Signature::FieldTypeMultiset;

    TypeSignature operator()(const DesignGraph& g, NodeId n) const {
        TypeSignature sig{};
        for (auto i : n.indices()) ++sig[static_cast<std::size_t>(g.fields()[i].type)];
        return sig;
    }
};

struct TraversalStrategy {
    enum class Kind { Bfs, Dfs, Random, Cluster };
    Kind kind = Kind::Bfs;
    std::size_t max_path = 1;     // Bfs
    std::size_t sample_size = 1;  // Random
    ClusterCriteria criteria;     // Cluster

    static TraversalStrategy bfs(std::size_t max_path) {
        if (max_path < 1) throw InvalidArgument("BFS max_path must be >= 1");
        return {Kind::Bfs, max_path};
    }
    static TraversalStrategy dfs() { return {Kind::Dfs}; }
    static TraversalStrategy random(std::size_t sample_size) {
        if (sample_size < 1) throw InvalidArgument("random sample_size must be >= 1");
        return {Kind::Random, 1, sample_size};
    }
    static TraversalStrategy cluster(ClusterCriteria c = {}) { return {Kind::Cluster, 1, 1, c}; }
};

inline const char* to_string(TraversalStrategy::Kind k) {
    switch (k) {
    case TraversalStrategy::Kind::Bfs: return "bfs";
    case TraversalStrategy::Kind::Dfs: return "dfs";
    case TraversalStrategy::Kind::Random: return "random";
    case TraversalStrategy::Kind::Cluster: return "cluster";
    }
    return "?";
}

// Nodes at distance 1..max_path from n0 in breadth order.
inline std::vector<NodeId> enumerate_bfs(const DesignGraph& g, NodeId n0, std::size_t max_path) {
    g.require(n0);
    if (max_path < 1) throw InvalidArgument("BFS max_path must be >= 1");
    std::vector<NodeId> out;
    std::unordered_set<std::uint64_t> seen{n0.bits()};
    std::vector<NodeId> frontier{n0};
    for (std::size_t depth = 1; depth <= max_path && !frontier.empty(); ++depth) {
        std::vector<NodeId> next;
        for (NodeId n : frontier)
            for (NodeId m : g.neighbors(n))
                if (seen.insert(m.bits()).second) next.push_back(m);
        out.insert(out.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    return out;
}

// Depth-first over attribute additions only, stopping at the size cap.
inline std::vector<NodeId> enumerate_dfs(const DesignGraph& g, NodeId n0) {
    g.require(n0);
    std::vector<NodeId> out;
    std::unordered_set<std::uint64_t> seen{n0.bits()};
    // explicit stack of (node, next field index to try)
    std::vector<std::pair<NodeId, std::size_t>> stack{{n0, 0}};
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (node.size() >= g.max_attrs() || next >= g.field_count()) {
            stack.pop_back();
            continue;
        }
        std::size_t i = next++;
        if (node.has(i)) continue;
        NodeId child = node.with(i);
        if (!seen.insert(child.bits()).second) continue;
        out.push_back(child);
        stack.emplace_back(child, 0);
    }
    return out;
}

namespace detail {

// Unbiased integer in [0, bound) independent of the standard library's
// distribution implementations.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

} // namespace detail

// Uniform sample without replacement from N \ {n0}, in draw order.
inline std::vector<NodeId> enumerate_random(const DesignGraph& g, NodeId n0, std::size_t sample_size, std::uint64_t seed) {
    g.require(n0);
    std::vector<NodeId> pool = g.nodes();
    std::erase(pool, n0);
    const std::size_t k = std::min(sample_size, pool.size());
    std::mt19937_64 rng(seed);
    for (std::size_t i = 0; i < k; ++i) {
        auto j = i + static_cast<std::size_t>(detail::uniform_below(rng, pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

// Nodes grouped by signature. Clusters are ordered by their minimum distance to
// n0 (n0 counts toward its own cluster), ties by signature.
inline std::vector<NodeId> enumerate_cluster(const DesignGraph& g, NodeId n0, const ClusterCriteria& criteria = {}) {
    g.require(n0);
    constexpr std::size_t kUnreachable = std::numeric_limits<std::size_t>::max();
    struct Cluster {
        std::size_t min_dist = kUnreachable;
        std::vector<NodeId> members;
    };
    std::map<TypeSignature, Cluster> clusters;
    for (NodeId n : g.nodes()) {
        auto& c = clusters[criteria(g, n)];
        auto d = g.shortest_path_len(n, n0);
        c.min_dist = std::min(c.min_dist, d ? *d : kUnreachable);
        if (n != n0) c.members.push_back(n);
    }
    std::vector<std::pair<TypeSignature, Cluster*>> order;
    for (auto& [sig, c] : clusters) order.emplace_back(sig, &c);
    std::stable_sort(order.begin(), order.end(),
                     [](const auto& a, const auto& b) { return a.second->min_dist < b.second->min_dist; });
    std::vector<NodeId> out;
    for (auto& [sig, c] : order) out.insert(out.end(), c->members.begin(), c->members.end());
    return out;
}

inline std::vector<NodeId> enumerate(const DesignGraph& g, NodeId n0, const TraversalStrategy& s, std::uint64_t seed = 0) {
    switch (s.kind) {
    case TraversalStrategy::Kind::Bfs: return enumerate_bfs(g, n0, s.max_path);
    case TraversalStrategy::Kind::Dfs: return enumerate_dfs(g, n0);
    case TraversalStrategy::Kind::Random: return enumerate_random(g, n0, s.sample_size, seed);
    case TraversalStrategy::Kind::Cluster: return enumerate_cluster(g, n0, s.criteria);
    }
    return {};
}

} // namespace vizrec
