//
// io.hpp
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

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "compass/clustered_btrees.hpp"
#include "compass/core.hpp"
#include "compass/graph.hpp"
#include "compass/oracle.hpp"
#include "compass/workload.hpp"

namespace compass {

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ull;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ull;

inline std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t h = kFnvOffset) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
    return h;
}

// Content hash: stable across file formats, bound to the deduplicated data.
inline std::uint64_t hash_dataset(const Dataset& ds) {
    std::uint64_t h = kFnvOffset;
    const std::uint64_t dims[3] = {ds.size(), ds.dim(), ds.num_attributes()};
    h = fnv1a64(dims, sizeof(dims), h);
    h = fnv1a64(ds.vector_data(), ds.size() * ds.dim() * sizeof(float), h);
    h = fnv1a64(ds.attribute_data(), ds.size() * ds.num_attributes() * sizeof(double), h);
    return h;
}

inline std::uint64_t hash_workload(const Workload& w) {
    std::uint64_t h = kFnvOffset;
    for (const FilteredQuery& q : w.queries) {
        h = fnv1a64(q.vector.data(), q.vector.size() * sizeof(float), h);
        const std::string pj = predicate_to_json(q.predicate).dump();
        h = fnv1a64(pj.data(), pj.size(), h);
        h = fnv1a64(&q.k, sizeof(q.k), h);
    }
    return h;
}

// ---------------------------------------------------------------------------
// Little-endian buffer primitives
// ---------------------------------------------------------------------------

namespace io {

class Writer {
  public:
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) {
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
        }
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
        }
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

    void u32_array(const std::vector<std::uint32_t>& v) {
        u64(v.size());
        for (std::uint32_t x : v) {
            u32(x);
        }
    }
    void u64_array(const std::vector<std::uint64_t>& v) {
        u64(v.size());
        for (std::uint64_t x : v) {
            u64(x);
        }
    }
    void f32_array(const std::vector<float>& v) {
        u64(v.size());
        for (float x : v) {
            f32(x);
        }
    }
    void f64_array(const std::vector<double>& v) {
        u64(v.size());
        for (double x : v) {
            f64(x);
        }
    }

    const std::string& buffer() const { return buf_; }
    void append(const Writer& other) { buf_ += other.buf_; }
    std::size_t size() const { return buf_.size(); }

  private:
    std::string buf_;
};

class Reader {
  public:
    Reader(const char* data, std::size_t len, std::string name) : p_(data), len_(len), name_(std::move(name)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p_[pos_ + i])) << (8 * i);
        }
        pos_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p_[pos_ + i])) << (8 * i);
        }
        pos_ += 8;
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }

    std::vector<std::uint32_t> u32_array() {
        const std::uint64_t n = u64();
        std::vector<std::uint32_t> v(n);
        for (auto& x : v) {
            x = u32();
        }
        return v;
    }
    std::vector<std::uint64_t> u64_array() {
        const std::uint64_t n = u64();
        std::vector<std::uint64_t> v(n);
        for (auto& x : v) {
            x = u64();
        }
        return v;
    }
    std::vector<float> f32_array() {
        const std::uint64_t n = u64();
        std::vector<float> v(n);
        for (auto& x : v) {
            x = f32();
        }
        return v;
    }
    std::vector<double> f64_array() {
        const std::uint64_t n = u64();
        std::vector<double> v(n);
        for (auto& x : v) {
            x = f64();
        }
        return v;
    }

    std::size_t pos() const { return pos_; }
    void seek(std::size_t pos) { pos_ = pos; }

  private:
    void need(std::size_t k) const {
        if (pos_ + k > len_) {
            throw DataError(name_ + ": truncated at byte " + std::to_string(pos_));
        }
    }
    const char* p_;
    std::size_t pos_ = 0;
    std::size_t len_;
    std::string name_;
};

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot open " + path + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw DataError("write failed for " + path);
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path);
    }
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

} // namespace io

// ---------------------------------------------------------------------------
// Graph section encoding (shared by the record graph and the cluster graph)
// ---------------------------------------------------------------------------

namespace io {

inline void encode_graph(Writer& w, const GraphIndex& g) {
    w.u32(g.build_config().M);
    w.u32(g.build_config().efc);
    w.u64(g.build_config().seed);
    w.u64(g.size());
    w.u32(g.entry_node());
    w.u32(static_cast<std::uint32_t>(g.num_layers()));
    for (std::size_t li = 0; li < g.num_layers(); ++li) {
        const GraphIndex::Layer& layer = g.layer(li);
        w.u32_array(layer.nodes);
        w.u64_array(layer.offsets);
        w.u32_array(layer.neighbors);
    }
}

inline GraphIndex decode_graph(Reader& r) {
    GraphBuildConfig cfg;
    cfg.M = r.u32();
    cfg.efc = r.u32();
    cfg.seed = r.u64();
    const std::uint64_t n = r.u64();
    const std::uint32_t entry = r.u32();
    const std::uint32_t n_layers = r.u32();
    std::vector<GraphIndex::Layer> layers(n_layers);
    for (auto& layer : layers) {
        layer.nodes = r.u32_array();
        layer.offsets = r.u64_array();
        layer.neighbors = r.u32_array();
    }
    GraphIndex g(cfg, entry, std::move(layers));
    if (g.size() != n) {
        throw DataError("graph section: layer 0 size disagrees with header");
    }
    return g;
}

} // namespace io

// ---------------------------------------------------------------------------
// Index bundle
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kBundleMagic = 0x42504d43u; // "CMPB"
inline constexpr std::uint32_t kBundleVersion = 1;
inline constexpr std::uint32_t kGroundTruthMagic = 0x31544743u; // "CGT1"

struct BundleHeader {
    std::uint32_t format_version = kBundleVersion;
    std::uint64_t dataset_hash = 0;
    std::uint32_t dim = 0;
    std::uint64_t n = 0;
    std::uint32_t m = 0;
    std::uint32_t M = 0;
    std::uint32_t efc = 0;
    std::uint32_t nlist = 0;
    std::uint64_t graph_seed = 0;
    std::uint64_t cluster_seed = 0;
};

struct SectionSize {
    std::string name;
    std::uint64_t bytes = 0;
};

inline std::vector<SectionSize> save_bundle(const std::string& path, const BundleHeader& header,
                                            const GraphIndex& graph, const ClusteredBTrees& cbt) {
    io::Writer graph_sec;
    io::encode_graph(graph_sec, graph);

    io::Writer ivf_sec;
    ivf_sec.u32(cbt.nlist);
    ivf_sec.u32(static_cast<std::uint32_t>(cbt.dim));
    ivf_sec.f32_array(cbt.centroids);
    ivf_sec.u32_array(cbt.assignments);

    io::Writer tree_sec;
    tree_sec.u32(cbt.nlist);
    tree_sec.u32(static_cast<std::uint32_t>(cbt.num_attributes));
    tree_sec.u64_array(cbt.run_offsets);
    tree_sec.f64_array(cbt.run_values);
    tree_sec.u32_array(cbt.run_ids);

    io::Writer cg_sec;
    io::encode_graph(cg_sec, cbt.centroid_graph);

    const io::Writer* sections[4] = {&graph_sec, &ivf_sec, &tree_sec, &cg_sec};
    const char* names[4] = {"graph", "ivf", "btrees", "cgraph"};

    io::Writer out;
    out.u32(kBundleMagic);
    out.u32(header.format_version);
    out.u64(header.dataset_hash);
    out.u32(header.dim);
    out.u64(header.n);
    out.u32(header.m);
    out.u32(header.M);
    out.u32(header.efc);
    out.u32(header.nlist);
    out.u64(header.graph_seed);
    out.u64(header.cluster_seed);
    out.u32(4); // section count
    // Section table: id, offset (from file start), length.
    const std::size_t table_bytes = 4 * (4 + 8 + 8);
    std::uint64_t offset = out.size() + table_bytes;
    for (int s = 0; s < 4; ++s) {
        out.u32(static_cast<std::uint32_t>(s + 1));
        out.u64(offset);
        out.u64(sections[s]->size());
        offset += sections[s]->size();
    }
    std::vector<SectionSize> sizes;
    for (int s = 0; s < 4; ++s) {
        out.append(*sections[s]);
        sizes.push_back({names[s], sections[s]->size()});
    }
    io::write_file(path, out.buffer());
    return sizes;
}

struct LoadedBundle {
    BundleHeader header;
    GraphIndex graph;
    ClusteredBTrees cbt;
    std::vector<SectionSize> section_sizes;
    std::uint64_t file_bytes = 0;
    std::uint64_t header_bytes = 0;
};

inline LoadedBundle load_bundle(const std::string& path) {
    const std::string bytes = io::read_file(path);
    io::Reader r(bytes.data(), bytes.size(), path);
    if (r.u32() != kBundleMagic) {
        throw DataError(path + ": not an index bundle");
    }
    LoadedBundle b;
    b.file_bytes = bytes.size();
    b.header.format_version = r.u32();
    if (b.header.format_version != kBundleVersion) {
        throw DataError(path + ": unsupported bundle version " + std::to_string(b.header.format_version));
    }
    b.header.dataset_hash = r.u64();
    b.header.dim = r.u32();
    b.header.n = r.u64();
    b.header.m = r.u32();
    b.header.M = r.u32();
    b.header.efc = r.u32();
    b.header.nlist = r.u32();
    b.header.graph_seed = r.u64();
    b.header.cluster_seed = r.u64();
    const std::uint32_t n_sections = r.u32();
    if (n_sections != 4) {
        throw DataError(path + ": unexpected section count");
    }
    struct Entry {
        std::uint32_t id;
        std::uint64_t offset;
        std::uint64_t length;
    };
    std::vector<Entry> entries(n_sections);
    for (auto& e : entries) {
        e.id = r.u32();
        e.offset = r.u64();
        e.length = r.u64();
        if (e.offset + e.length > bytes.size()) {
            throw DataError(path + ": section extends past end of file");
        }
    }
    b.header_bytes = r.pos();

    const char* names[4] = {"graph", "ivf", "btrees", "cgraph"};
    for (const Entry& e : entries) {
        io::Reader sec(bytes.data() + e.offset, e.length, path + "#" + std::to_string(e.id));
        switch (e.id) {
            case 1:
                b.graph = io::decode_graph(sec);
                break;
            case 2: {
                b.cbt.nlist = sec.u32();
                b.cbt.dim = sec.u32();
                b.cbt.centroids = sec.f32_array();
                b.cbt.assignments = sec.u32_array();
                break;
            }
            case 3: {
                const std::uint32_t nlist = sec.u32();
                b.cbt.num_attributes = sec.u32();
                if (nlist != b.cbt.nlist) {
                    throw DataError(path + ": tree section disagrees with IVF section");
                }
                b.cbt.run_offsets = sec.u64_array();
                b.cbt.run_values = sec.f64_array();
                b.cbt.run_ids = sec.u32_array();
                break;
            }
            case 4:
                b.cbt.centroid_graph = io::decode_graph(sec);
                break;
            default:
                throw DataError(path + ": unknown section id " + std::to_string(e.id));
        }
        b.section_sizes.push_back({names[e.id - 1], e.length});
    }
    if (b.graph.size() != b.header.n || b.cbt.assignments.size() != b.header.n) {
        throw DataError(path + ": section sizes disagree with header");
    }
    return b;
}

// ---------------------------------------------------------------------------
// Ground-truth cache
// ---------------------------------------------------------------------------

struct GroundTruthFile {
    std::uint64_t dataset_hash = 0;
    std::uint64_t workload_hash = 0;
    std::uint32_t k = 0;
    std::vector<GroundTruthRow> rows;
};

inline void save_ground_truth(const std::string& path, const GroundTruthFile& gt) {
    io::Writer w;
    w.u32(kGroundTruthMagic);
    w.u32(1);
    w.u64(gt.dataset_hash);
    w.u64(gt.workload_hash);
    w.u32(gt.k);
    w.u64(gt.rows.size());
    for (const GroundTruthRow& row : gt.rows) {
        w.u32(static_cast<std::uint32_t>(row.entries.size()));
        for (const ScoredRecord& r : row.entries) {
            w.u32(r.record_id);
            w.f64(r.dist);
        }
    }
    io::write_file(path, w.buffer());
}

inline GroundTruthFile load_ground_truth(const std::string& path) {
    const std::string bytes = io::read_file(path);
    io::Reader r(bytes.data(), bytes.size(), path);
    if (r.u32() != kGroundTruthMagic) {
        throw DataError(path + ": not a ground-truth file");
    }
    if (r.u32() != 1) {
        throw DataError(path + ": unsupported ground-truth version");
    }
    GroundTruthFile gt;
    gt.dataset_hash = r.u64();
    gt.workload_hash = r.u64();
    gt.k = r.u32();
    const std::uint64_t n = r.u64();
    gt.rows.resize(n);
    for (auto& row : gt.rows) {
        const std::uint32_t len = r.u32();
        row.entries.resize(len);
        for (auto& e : row.entries) {
            e.record_id = r.u32();
            e.dist = r.f64();
        }
    }
    return gt;
}

} // namespace compass
