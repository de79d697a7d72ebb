//
// workload.hpp
//
// Copyright 2026 The Compass Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "compass/core.hpp"
#include "compass/predicate_json.hpp"
#include "compass/rng.hpp"

namespace compass {

// File and format problems surface as DataError so callers can distinguish
// bad inputs from bad usage.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// fvecs / ivecs
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
std::vector<std::vector<T>> read_xvecs(const std::string& path) {
    static_assert(sizeof(T) == 4);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    std::vector<std::vector<T>> out;
    std::size_t offset = 0;
    std::int32_t dim = -1;
    while (true) {
        std::int32_t d = 0;
        in.read(reinterpret_cast<char*>(&d), 4);
        if (in.gcount() == 0) {
            break;
        }
        if (in.gcount() != 4) {
            throw DataError(path + ": truncated record header at byte " + std::to_string(offset));
        }
        if (d <= 0) {
            throw DataError(path + ": non-positive dimension at byte " + std::to_string(offset));
        }
        if (dim >= 0 && d != dim) {
            throw DataError(path + ": inconsistent dimension at byte " + std::to_string(offset));
        }
        dim = d;
        std::vector<T> rec(static_cast<std::size_t>(d));
        in.read(reinterpret_cast<char*>(rec.data()), 4ll * d);
        if (in.gcount() != 4ll * d) {
            throw DataError(path + ": truncated record payload at byte " + std::to_string(offset + 4));
        }
        offset += 4 + 4ull * static_cast<std::size_t>(d);
        out.push_back(std::move(rec));
    }
    return out;
}

template <typename T>
void write_xvecs(const std::string& path, const std::vector<std::vector<T>>& records) {
    static_assert(sizeof(T) == 4);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open " + path + " for writing");
    }
    for (const auto& rec : records) {
        const std::int32_t d = static_cast<std::int32_t>(rec.size());
        out.write(reinterpret_cast<const char*>(&d), 4);
        out.write(reinterpret_cast<const char*>(rec.data()), 4ll * d);
    }
    if (!out) {
        throw DataError("write failed for " + path);
    }
}

} // namespace detail

inline std::vector<std::vector<float>> read_fvecs(const std::string& path) {
    return detail::read_xvecs<float>(path);
}

inline void write_fvecs(const std::string& path, const std::vector<std::vector<float>>& records) {
    detail::write_xvecs(path, records);
}

inline std::vector<std::vector<std::int32_t>> read_ivecs(const std::string& path) {
    return detail::read_xvecs<std::int32_t>(path);
}

inline void write_ivecs(const std::string& path, const std::vector<std::vector<std::int32_t>>& records) {
    detail::write_xvecs(path, records);
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

// m independent Uniform[0,1) attributes per record, row-major.
inline std::vector<double> generate_attributes(std::size_t n, std::size_t m, std::uint64_t seed) {
    if (n == 0 || m == 0) {
        throw std::invalid_argument("generate_attributes: n and m must be positive");
    }
    Rng rng(seed);
    std::vector<double> attrs(n * m);
    for (double& a : attrs) {
        a = uniform01(rng);
    }
    return attrs;
}

inline std::vector<float> generate_uniform_vectors(std::size_t n, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<float> v(n * dim);
    for (float& x : v) {
        x = static_cast<float>(uniform01(rng));
    }
    return v;
}

// Isotropic Gaussian mixture: component centers drawn from N(0, I), points
// from N(center, spread^2 * I).
inline std::vector<float> generate_gaussian_mixture(std::size_t n, std::size_t dim, std::uint32_t components,
                                                    double spread, std::uint64_t seed) {
    if (components == 0) {
        throw std::invalid_argument("generate_gaussian_mixture: components must be positive");
    }
    Rng rng(seed);
    std::vector<double> centers(static_cast<std::size_t>(components) * dim);
    for (double& c : centers) {
        c = normal01(rng);
    }
    std::vector<float> out(n * dim);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t comp = static_cast<std::size_t>(uniform_below(rng, components));
        const double* center = centers.data() + comp * dim;
        float* row = out.data() + i * dim;
        for (std::size_t j = 0; j < dim; ++j) {
            row[j] = static_cast<float>(center[j] + spread * normal01(rng));
        }
    }
    return out;
}

// Removes exact duplicate vectors (keeping the first occurrence) and drops
// the matching attribute rows. Returns the number of removed records.
inline std::size_t deduplicate_records(std::vector<float>& vectors, std::size_t dim, std::vector<double>& attributes,
                                       std::size_t m) {
    const std::size_t n = dim == 0 ? 0 : vectors.size() / dim;
    std::unordered_map<std::string, std::uint32_t> seen;
    seen.reserve(n);
    std::size_t kept = 0;
    for (std::size_t i = 0; i < n; ++i) {
        std::string key(reinterpret_cast<const char*>(vectors.data() + i * dim), dim * sizeof(float));
        if (!seen.emplace(std::move(key), static_cast<std::uint32_t>(i)).second) {
            continue;
        }
        if (kept != i) {
            std::copy(vectors.begin() + i * dim, vectors.begin() + (i + 1) * dim, vectors.begin() + kept * dim);
            std::copy(attributes.begin() + i * m, attributes.begin() + (i + 1) * m, attributes.begin() + kept * m);
        }
        ++kept;
    }
    const std::size_t removed = n - kept;
    vectors.resize(kept * dim);
    attributes.resize(kept * m);
    return removed;
}

// ---------------------------------------------------------------------------
// Predicate generation
// ---------------------------------------------------------------------------

// Range leaf with exact passrate s under Uniform[0,1) attributes: the lower
// bound is drawn from Uniform[0, 1-s] and the width is exactly s.
inline Predicate generate_range_predicate(std::size_t attr_index, double passrate, Rng& rng) {
    if (!(passrate > 0.0 && passrate <= 1.0)) {
        throw std::invalid_argument("generate_range_predicate: passrate must be in (0, 1]");
    }
    const double lo = uniform_in(rng, 0.0, 1.0 - passrate);
    return Predicate::range(attr_index, lo, lo + passrate);
}

enum class ComposeMode { Conjunction, Disjunction };

inline const char* compose_mode_name(ComposeMode mode) {
    return mode == ComposeMode::Conjunction ? "conj" : "disj";
}

struct WorkloadMeta {
    std::string mode = "conj";
    std::uint32_t n_attrs = 1;
    double passrate = 0.3;
    std::uint64_t seed = 0;
    std::uint32_t k = 10;
};

struct Workload {
    std::vector<FilteredQuery> queries;
    WorkloadMeta meta;
};

// One leaf per attribute 0..n_attrs-1 at the given per-attribute passrate,
// combined under AND or OR; a single attribute stays a bare leaf.
inline Workload compose_workload(const std::vector<std::vector<float>>& query_vectors, ComposeMode mode,
                                 std::uint32_t n_attrs, double passrate, std::uint32_t k, std::uint64_t seed) {
    if (n_attrs == 0) {
        throw std::invalid_argument("compose_workload: n_attrs must be positive");
    }
    Workload w;
    w.meta = {compose_mode_name(mode), n_attrs, passrate, seed, k};
    Rng rng(seed);
    w.queries.reserve(query_vectors.size());
    for (const auto& qv : query_vectors) {
        std::vector<Predicate> leaves;
        leaves.reserve(n_attrs);
        for (std::uint32_t a = 0; a < n_attrs; ++a) {
            leaves.push_back(generate_range_predicate(a, passrate, rng));
        }
        Predicate p = leaves.size() == 1 ? std::move(leaves.front())
                      : mode == ComposeMode::Conjunction ? Predicate::conjunction(std::move(leaves))
                                                         : Predicate::disjunction(std::move(leaves));
        w.queries.push_back({qv, std::move(p), k});
    }
    return w;
}

// ---------------------------------------------------------------------------
// Attribute CSV
// ---------------------------------------------------------------------------

inline void write_attributes_csv(const std::string& path, const std::vector<double>& attributes, std::size_t m,
                                 const std::vector<std::string>* names = nullptr) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot open " + path + " for writing");
    }
    for (std::size_t a = 0; a < m; ++a) {
        out << (a > 0 ? "," : "") << (names != nullptr ? (*names)[a] : "a" + std::to_string(a));
    }
    out << "\n";
    char buf[64];
    const std::size_t n = m == 0 ? 0 : attributes.size() / m;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < m; ++a) {
            std::snprintf(buf, sizeof(buf), "%.17g", attributes[i * m + a]);
            out << (a > 0 ? "," : "") << buf;
        }
        out << "\n";
    }
    if (!out) {
        throw DataError("write failed for " + path);
    }
}

struct AttributeTable {
    std::vector<std::string> names;
    std::vector<double> values; // n * m
    std::size_t m = 0;
};

inline AttributeTable read_attributes_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    AttributeTable table;
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError(path + ": missing CSV header");
    }
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            table.names.push_back(cell);
        }
    }
    table.m = table.names.size();
    if (table.m == 0) {
        throw DataError(path + ": empty CSV header");
    }
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) {
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::size_t cols = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                table.values.push_back(std::stod(cell));
            } catch (const std::exception&) {
                throw DataError(path + ": bad number in row " + std::to_string(row));
            }
            ++cols;
        }
        if (cols != table.m) {
            throw DataError(path + ": row " + std::to_string(row) + " has " + std::to_string(cols)
                            + " columns, expected " + std::to_string(table.m));
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// Dataset assembly
// ---------------------------------------------------------------------------

inline Schema schema_from_observed(const AttributeTable& table) {
    Schema schema(table.m);
    const std::size_t n = table.m == 0 ? 0 : table.values.size() / table.m;
    for (std::size_t a = 0; a < table.m; ++a) {
        schema[a].name = table.names[a];
        double lo = 0.0, hi = 1.0;
        if (n > 0) {
            lo = hi = table.values[a];
            for (std::size_t i = 1; i < n; ++i) {
                lo = std::min(lo, table.values[i * table.m + a]);
                hi = std::max(hi, table.values[i * table.m + a]);
            }
        }
        schema[a] = {table.names[a], lo, hi};
    }
    return schema;
}

// Single ingest point used by every command: reads vectors and attributes,
// drops exact duplicate vectors, and aligns the rows into a Dataset.
inline Dataset load_dataset(const std::string& vectors_path, const std::string& attrs_path,
                            std::size_t* deduplicated = nullptr) {
    auto records = read_fvecs(vectors_path);
    if (records.empty()) {
        throw DataError(vectors_path + ": no records");
    }
    const std::size_t dim = records[0].size();
    std::vector<float> flat;
    flat.reserve(records.size() * dim);
    for (const auto& r : records) {
        flat.insert(flat.end(), r.begin(), r.end());
    }
    AttributeTable table = read_attributes_csv(attrs_path);
    const std::size_t rows = table.m == 0 ? 0 : table.values.size() / table.m;
    if (rows != records.size()) {
        throw DataError(attrs_path + ": " + std::to_string(rows) + " attribute rows for "
                        + std::to_string(records.size()) + " vectors");
    }
    const std::size_t removed = deduplicate_records(flat, dim, table.values, table.m);
    if (deduplicated != nullptr) {
        *deduplicated = removed;
    }
    Schema schema = schema_from_observed(table);
    return Dataset(dim, std::move(flat), std::move(table.values), std::move(schema));
}

// ---------------------------------------------------------------------------
// Workload JSONL
// ---------------------------------------------------------------------------

// First line is a meta header; each following line is one query, with its
// vector inline or as {"qid": i} into a separate query-vector file.
inline void write_workload_jsonl(const std::string& path, const Workload& w) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot open " + path + " for writing");
    }
    nlohmann::json meta;
    meta["meta"] = {{"mode", w.meta.mode},
                    {"n_attrs", w.meta.n_attrs},
                    {"passrate", w.meta.passrate},
                    {"seed", w.meta.seed},
                    {"k", w.meta.k}};
    out << meta.dump() << "\n";
    for (const FilteredQuery& q : w.queries) {
        nlohmann::json j;
        j["k"] = q.k;
        j["predicate"] = predicate_to_json(q.predicate);
        nlohmann::json vec = nlohmann::json::array();
        for (float x : q.vector) {
            vec.push_back(static_cast<double>(x));
        }
        j["vector"] = std::move(vec);
        out << j.dump() << "\n";
    }
    if (!out) {
        throw DataError("write failed for " + path);
    }
}

inline Workload read_workload_jsonl(const std::string& path,
                                    const std::vector<std::vector<float>>* query_vectors = nullptr) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    Workload w;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (j.contains("meta")) {
            const auto& m = j["meta"];
            w.meta.mode = m.value("mode", std::string("conj"));
            w.meta.n_attrs = m.value("n_attrs", 1u);
            w.meta.passrate = m.value("passrate", 0.3);
            w.meta.seed = m.value("seed", std::uint64_t{0});
            w.meta.k = m.value("k", 10u);
            continue;
        }
        FilteredQuery q;
        q.k = j.value("k", w.meta.k);
        if (!j.contains("predicate")) {
            throw DataError(path + ":" + std::to_string(lineno) + ": query without predicate");
        }
        try {
            q.predicate = predicate_from_json(j["predicate"]);
        } catch (const std::invalid_argument& e) {
            throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
        if (j.contains("vector")) {
            for (const auto& x : j["vector"]) {
                q.vector.push_back(x.get<float>());
            }
        } else if (j.contains("qid")) {
            if (query_vectors == nullptr) {
                throw DataError(path + ":" + std::to_string(lineno) + ": qid reference without a query-vector file");
            }
            const std::size_t qid = j["qid"].get<std::size_t>();
            if (qid >= query_vectors->size()) {
                throw DataError(path + ":" + std::to_string(lineno) + ": qid out of range");
            }
            q.vector = (*query_vectors)[qid];
        } else {
            throw DataError(path + ":" + std::to_string(lineno) + ": query needs \"vector\" or \"qid\"");
        }
        w.queries.push_back(std::move(q));
    }
    return w;
}

} // namespace compass
