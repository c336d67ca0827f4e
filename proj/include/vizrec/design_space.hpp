#pragma once

#include <bit>
#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "vizrec/dataset.hpp"
#include "vizrec/errors.hpp"

namespace vizrec {

// A design node: the set of attributes its visualizations share, as a bitmask
// over dataset field indices.
class NodeId {
public:
    constexpr NodeId() = default;
    constexpr explicit NodeId(std::uint64_t bits) : bits_(bits) {}

    static NodeId of(std::initializer_list<std::size_t> indices) {
        NodeId n;
        for (auto i : indices) n = n.with(i);
        return n;
    }

    constexpr std::uint64_t bits() const { return bits_; }
    constexpr std::size_t size() const { return static_cast<std::size_t>(std::popcount(bits_)); }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr bool has(std::size_t i) const { return (bits_ >> i) & 1u; }
    constexpr NodeId with(std::size_t i) const { return NodeId(bits_ | (std::uint64_t{1} << i)); }
    constexpr NodeId without(std::size_t i) const { return NodeId(bits_ & ~(std::uint64_t{1} << i)); }
    constexpr bool is_subset_of(NodeId o) const { return (bits_ & ~o.bits_) == 0; }

    std::vector<std::size_t> indices() const {
        std::vector<std::size_t> out;
        for (auto b = bits_; b; b &= b - 1) out.push_back(static_cast<std::size_t>(std::countr_zero(b)));
        return out;
    }

    constexpr bool operator==(const NodeId&) const = default;

    // Size first, then lexicographic over the ascending index sequence.
    std::strong_ordering operator<=>(const NodeId& o) const {
        if (auto c = size() <=> o.size(); c != 0) return c;
        auto a = indices(), b = o.indices();
        return a <=> b;
    }

private:
    std::uint64_t bits_ = 0;
};

inline std::size_t symmetric_difference(NodeId a, NodeId b) {
    return static_cast<std::size_t>(std::popcount(a.bits() ^ b.bits()));
}

struct EnumerationScope {
    enum class Mode { Hybrid, VisualEncodingOnly, DataQueryOnly };
    Mode mode = Mode::Hybrid;
    NodeId selected; // VisualEncodingOnly only

    static EnumerationScope hybrid() { return {}; }
    static EnumerationScope data_query_only() { return {Mode::DataQueryOnly, {}}; }
    static EnumerationScope visual_encoding_only(NodeId selected) { return {Mode::VisualEncodingOnly, selected}; }
};

inline constexpr std::size_t kMaxFields = 64;

// G = (N, E) at attribute-set granularity. Nodes are all attribute subsets of
// size 1..max_attrs; two nodes are adjacent iff they differ by one attribute.
// Adjacency is computed on demand.
class DesignGraph {
public:
    DesignGraph(std::vector<Field> fields, std::size_t max_attrs, std::string dataset_ref = {})
        : fields_(std::move(fields)), max_attrs_(max_attrs), dataset_ref_(std::move(dataset_ref)) {
        if (fields_.size() > kMaxFields)
            throw InvalidBound("design graphs support at most 64 fields, got " + std::to_string(fields_.size()));
        if (max_attrs_ < 1 || max_attrs_ > fields_.size())
            throw InvalidBound("max_attrs must be in [1, " + std::to_string(fields_.size()) + "], got " +
                               std::to_string(max_attrs_));
    }

    const std::vector<Field>& fields() const { return fields_; }
    std::size_t field_count() const { return fields_.size(); }
    std::size_t max_attrs() const { return max_attrs_; }
    const std::string& dataset_ref() const { return dataset_ref_; }

    std::uint64_t universe() const {
        return fields_.size() == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << fields_.size()) - 1;
    }

    bool contains(NodeId n) const {
        return !n.empty() && n.size() <= max_attrs_ && (n.bits() & ~universe()) == 0;
    }

    void require(NodeId n) const {
        if (!contains(n)) throw UnknownNode("node " + describe(n) + " is not in the design graph");
    }

    std::size_t node_count() const {
        std::size_t total = 0, c = 1;
        const std::size_t n = fields_.size();
        for (std::size_t k = 1; k <= max_attrs_; ++k) {
            c = c * (n - k + 1) / k;
            total += c;
        }
        return total;
    }

    NodeId node(const std::vector<std::string>& names) const {
        NodeId n;
        for (const auto& name : names) n = n.with(index_of(name));
        require(n);
        return n;
    }

    NodeId node(const std::set<std::string>& names) const { return node(std::vector<std::string>(names.begin(), names.end())); }

    std::size_t index_of(std::string_view name) const {
        for (std::size_t i = 0; i < fields_.size(); ++i)
            if (fields_[i].name == name) return i;
        throw UnknownField("unknown field '" + std::string(name) + "'");
    }

    std::vector<std::string> names(NodeId n) const {
        std::vector<std::string> out;
        for (auto i : n.indices()) out.push_back(fields_.at(i).name);
        return out;
    }

    std::string describe(NodeId n) const {
        std::string s = "{";
        bool first = true;
        for (auto i : n.indices()) {
            if (!first) s += ", ";
            first = false;
            s += i < fields_.size() ? fields_[i].name : "#" + std::to_string(i);
        }
        return s + "}";
    }

    // All nodes ordered by size, then lexicographically by field index.
    std::vector<NodeId> nodes() const {
        std::vector<NodeId> out;
        out.reserve(node_count());
        const std::size_t n = fields_.size();
        for (std::size_t k = 1; k <= max_attrs_; ++k) {
            std::vector<std::size_t> idx(k);
            for (std::size_t i = 0; i < k; ++i) idx[i] = i;
            while (true) {
                NodeId node;
                for (auto i : idx) node = node.with(i);
                out.push_back(node);
                std::size_t pos = k;
                while (pos > 0 && idx[pos - 1] == n - k + pos - 1) --pos;
                if (pos == 0) break;
                ++idx[pos - 1];
                for (std::size_t j = pos; j < k; ++j) idx[j] = idx[j - 1] + 1;
            }
        }
        return out;
    }

    // Additions in field order, then removals in field order.
    std::vector<NodeId> neighbors(NodeId n) const {
        require(n);
        std::vector<NodeId> out;
        if (n.size() < max_attrs_)
            for (std::size_t i = 0; i < fields_.size(); ++i)
                if (!n.has(i)) out.push_back(n.with(i));
        if (n.size() > 1)
            for (std::size_t i = 0; i < fields_.size(); ++i)
                if (n.has(i)) out.push_back(n.without(i));
        return out;
    }

    // Edge count of a shortest path that stays inside the size bounds; nullopt
    // when unreachable (only possible with max_attrs == 1).
    std::optional<std::size_t> shortest_path_len(NodeId a, NodeId b) const {
        require(a);
        require(b);
        if (a == b) return 0;
        // With room for one extra attribute every removal can be paired with an
        // addition, so the symmetric difference is always realizable.
        if (max_attrs_ >= 2) return symmetric_difference(a, b);
        return std::nullopt;
    }

    bool within_constraints(NodeId node, NodeId n0, std::optional<std::size_t> max_path,
                            std::optional<std::size_t> max_inputs) const {
        if (max_inputs && node.size() > *max_inputs) return false;
        if (max_path) {
            auto d = shortest_path_len(node, n0);
            if (!d || *d > *max_path) return false;
        }
        return true;
    }

private:
    std::vector<Field> fields_;
    std::size_t max_attrs_;
    std::string dataset_ref_;
};

inline DesignGraph build_graph(const Dataset& ds, std::size_t max_attrs = 3) {
    return DesignGraph(ds.fields(), max_attrs, ds.name());
}

// Nodes permitted by a scope, preserving input order. VisualEncodingOnly
// collapses to the selected node regardless of input.
inline std::vector<NodeId> apply_scope(const DesignGraph& g, const EnumerationScope& scope, std::vector<NodeId> nodes) {
    if (scope.mode == EnumerationScope::Mode::VisualEncodingOnly) {
        if (scope.selected.empty() || !g.contains(scope.selected))
            throw InvalidBound("visual-encoding scope requires a non-empty selection within max_attrs");
        return {scope.selected};
    }
    return nodes;
}

} // namespace vizrec
