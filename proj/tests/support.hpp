#pragma once

#include <memory>
#include <string>
#include <vector>

#include "vizrec/vizrec.hpp"

namespace testing_support {

inline std::string data_dir() { return VIZREC_DATA_DIR; }

// Catalog over the bundled datasets, loaded once per test binary.
inline std::shared_ptr<const vizrec::Catalog> catalog() {
    static auto c = vizrec::load_catalog(data_dir());
    return c;
}

inline std::shared_ptr<const vizrec::Dataset> dataset(const std::string& name) {
    return catalog()->engine(name)->dataset_ptr();
}

// Fields named a, b, c, ... all of type `t`.
inline std::vector<vizrec::Field> letters(std::size_t n, vizrec::FieldType t = vizrec::FieldType::Nominal) {
    std::vector<vizrec::Field> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back({std::string(1, static_cast<char>('a' + i)), t});
    return out;
}

// One-column table from raw values.
inline vizrec::Dataset column(const std::string& name, const std::vector<std::string>& values, vizrec::FieldType t) {
    std::vector<vizrec::Row> rows;
    for (const auto& v : values) rows.push_back({v});
    return vizrec::Dataset("t", {{name, t}}, rows);
}

inline vizrec::Encoding enc(vizrec::Channel c, std::string field, vizrec::Transformation t = vizrec::Transformation::raw()) {
    return {c, std::move(field), t};
}

inline vizrec::Encoding count_on(vizrec::Channel c) {
    return {c, std::string(vizrec::kCountField), vizrec::Transformation::count()};
}

inline bool has_rule(const vizrec::Score& s, const std::string& rule) {
    for (const auto& [r, v] : s.breakdown)
        if (r == rule) return true;
    return false;
}

} // namespace testing_support
