//
// graph.hpp
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

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "compass/core.hpp"
#include "compass/rng.hpp"

namespace compass {

struct GraphBuildConfig {
    std::uint32_t M = 16;
    std::uint32_t efc = 200;
    std::uint64_t seed = 42;
};

// Layered proximity graph. Layer 0 covers every record; upper layers are
// sparse routing layers. Immutable after construction.
class GraphIndex {
  public:
    struct Layer {
        std::vector<std::uint32_t> nodes;     // sorted ids present in this layer
        std::vector<std::uint64_t> offsets;   // nodes.size() + 1
        std::vector<std::uint32_t> neighbors; // flattened adjacency
    };

    GraphIndex() = default;

    GraphIndex(GraphBuildConfig config, std::uint32_t entry_node, std::vector<Layer> layers)
        : config_(config), entry_node_(entry_node), layers_(std::move(layers)) {
        validate();
    }

    static GraphIndex build(const float* data, std::size_t n, std::size_t dim, const GraphBuildConfig& config);

    // Assembles a single-layer graph from explicit (possibly directed)
    // adjacency lists. Used for custom traversal graphs.
    static GraphIndex from_layer0(std::vector<std::vector<std::uint32_t>> adjacency, std::uint32_t entry_node,
                                  std::uint32_t max_degree = 0);

    std::size_t size() const { return layers_.empty() ? 0 : layers_[0].nodes.size(); }
    std::size_t num_layers() const { return layers_.size(); }
    std::uint32_t entry_node() const { return entry_node_; }
    std::uint32_t max_degree() const { return config_.M; }
    const GraphBuildConfig& build_config() const { return config_; }
    const Layer& layer(std::size_t i) const { return layers_[i]; }

    std::span<const std::uint32_t> neighbors0(std::uint32_t node) const {
        const Layer& l0 = layers_[0];
        return {l0.neighbors.data() + l0.offsets[node], l0.neighbors.data() + l0.offsets[node + 1]};
    }

    std::span<const std::uint32_t> neighbors(std::size_t layer_idx, std::uint32_t node) const {
        if (layer_idx == 0) {
            return neighbors0(node);
        }
        const Layer& l = layers_[layer_idx];
        auto it = std::lower_bound(l.nodes.begin(), l.nodes.end(), node);
        if (it == l.nodes.end() || *it != node) {
            return {};
        }
        const std::size_t slot = static_cast<std::size_t>(it - l.nodes.begin());
        return {l.neighbors.data() + l.offsets[slot], l.neighbors.data() + l.offsets[slot + 1]};
    }

  private:
    void validate() const {
        if (layers_.empty()) {
            throw std::invalid_argument("GraphIndex: no layers");
        }
        const std::size_t n = layers_[0].nodes.size();
        if (n == 0) {
            throw std::invalid_argument("GraphIndex: empty layer 0");
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (layers_[0].nodes[i] != i) {
                throw std::invalid_argument("GraphIndex: layer 0 must contain every record exactly once");
            }
        }
        if (entry_node_ >= n) {
            throw std::invalid_argument("GraphIndex: entry node out of range");
        }
        for (std::size_t li = 0; li < layers_.size(); ++li) {
            const Layer& l = layers_[li];
            if (l.offsets.size() != l.nodes.size() + 1 || l.offsets.front() != 0
                || l.offsets.back() != l.neighbors.size()) {
                throw std::invalid_argument("GraphIndex: malformed layer offsets");
            }
            const std::uint64_t cap = li == 0 ? 2ull * config_.M : config_.M;
            for (std::size_t s = 0; s < l.nodes.size(); ++s) {
                if (l.offsets[s + 1] < l.offsets[s] || l.offsets[s + 1] - l.offsets[s] > cap) {
                    throw std::invalid_argument("GraphIndex: neighbor list exceeds degree cap");
                }
                for (std::uint64_t e = l.offsets[s]; e < l.offsets[s + 1]; ++e) {
                    if (l.neighbors[e] >= n) {
                        throw std::invalid_argument("GraphIndex: neighbor id out of range");
                    }
                    if (l.neighbors[e] == l.nodes[s]) {
                        throw std::invalid_argument("GraphIndex: self loop");
                    }
                }
            }
        }
    }

    GraphBuildConfig config_;
    std::uint32_t entry_node_ = 0;
    std::vector<Layer> layers_;
};

// ---------------------------------------------------------------------------
// Construction
// ---------------------------------------------------------------------------

namespace detail {

class HnswBuilder {
  public:
    HnswBuilder(const float* data, std::size_t n, std::size_t dim, const GraphBuildConfig& cfg)
        : data_(data)
        , n_(n)
        , dim_(dim)
        , cfg_(cfg)
        , rng_(cfg.seed)
        , level_scale_(1.0 / std::log(static_cast<double>(cfg.M)))
        , stamp_(n, 0) {}

    GraphIndex run() {
        levels_.resize(n_);
        links_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            levels_[i] = sample_level();
            links_[i].resize(levels_[i] + 1);
        }
        entry_ = 0;
        top_ = levels_[0];
        for (std::uint32_t i = 1; i < n_; ++i) {
            insert(i);
        }
        return finalize();
    }

  private:
    std::uint32_t sample_level() {
        const double u = 1.0 - uniform01(rng_); // (0, 1]
        const double lvl = std::floor(-std::log(u) * level_scale_);
        return lvl > 30.0 ? 30u : static_cast<std::uint32_t>(lvl);
    }

    double dist(std::uint32_t a, std::uint32_t b) const {
        return squared_l2_raw(data_ + static_cast<std::size_t>(a) * dim_, data_ + static_cast<std::size_t>(b) * dim_,
                              dim_);
    }

    double dist_to(const float* q, std::uint32_t a) const {
        return squared_l2_raw(q, data_ + static_cast<std::size_t>(a) * dim_, dim_);
    }

    std::uint32_t greedy_descent(const float* q, std::uint32_t start, std::uint32_t layer) const {
        std::uint32_t cur = start;
        double best = dist_to(q, cur);
        bool improved = true;
        while (improved) {
            improved = false;
            for (std::uint32_t nb : links_[cur][layer]) {
                const double d = dist_to(q, nb);
                if (d < best) {
                    best = d;
                    cur = nb;
                    improved = true;
                }
            }
        }
        return cur;
    }

    std::vector<ScoredRecord> search_layer(const float* q, const std::vector<ScoredRecord>& entry_points,
                                           std::uint32_t ef, std::uint32_t layer) {
        ++generation_;
        MinDistHeap candidates;
        MaxDistHeap best;
        for (const ScoredRecord& e : entry_points) {
            if (stamp_[e.record_id] == generation_) {
                continue;
            }
            stamp_[e.record_id] = generation_;
            candidates.push(e);
            best.push(e);
            if (best.size() > ef) {
                best.pop();
            }
        }
        while (!candidates.empty()) {
            const ScoredRecord c = candidates.pop();
            if (best.size() >= ef && c.dist > best.top().dist) {
                break;
            }
            for (std::uint32_t nb : links_[c.record_id][layer]) {
                if (stamp_[nb] == generation_) {
                    continue;
                }
                stamp_[nb] = generation_;
                const double d = dist_to(q, nb);
                if (best.size() < ef || d < best.top().dist) {
                    candidates.push({nb, d});
                    best.push({nb, d});
                    if (best.size() > ef) {
                        best.pop();
                    }
                }
            }
        }
        return best.sorted();
    }

    // Relative-distance pruning over ascending candidates: a candidate is
    // kept only if it is closer to the target than to every already-kept
    // neighbor. Pruned candidates refill any remaining slots, nearest first.
    std::vector<std::uint32_t> select_neighbors(const std::vector<ScoredRecord>& ascending,
                                                std::uint32_t max_links) const {
        std::vector<ScoredRecord> chosen;
        std::vector<ScoredRecord> pruned;
        chosen.reserve(max_links);
        for (const ScoredRecord& c : ascending) {
            if (chosen.size() >= max_links) {
                break;
            }
            bool keep = true;
            for (const ScoredRecord& s : chosen) {
                if (dist(c.record_id, s.record_id) < c.dist) {
                    keep = false;
                    break;
                }
            }
            if (keep) {
                chosen.push_back(c);
            } else {
                pruned.push_back(c);
            }
        }
        for (std::size_t i = 0; i < pruned.size() && chosen.size() < max_links; ++i) {
            chosen.push_back(pruned[i]);
        }
        std::vector<std::uint32_t> ids;
        ids.reserve(chosen.size());
        for (const ScoredRecord& s : chosen) {
            ids.push_back(s.record_id);
        }
        return ids;
    }

    void shrink(std::uint32_t node, std::uint32_t layer, std::uint32_t cap) {
        auto& lnk = links_[node][layer];
        std::vector<ScoredRecord> cand;
        cand.reserve(lnk.size());
        for (std::uint32_t nb : lnk) {
            cand.push_back({nb, dist(node, nb)});
        }
        std::sort(cand.begin(), cand.end(), scored_before);
        lnk = select_neighbors(cand, cap);
    }

    void insert(std::uint32_t id) {
        const std::uint32_t level = levels_[id];
        const float* q = data_ + static_cast<std::size_t>(id) * dim_;
        std::uint32_t ep = entry_;
        for (std::uint32_t lc = top_; lc > level; --lc) {
            ep = greedy_descent(q, ep, lc);
        }
        std::vector<ScoredRecord> entry_points{{ep, dist_to(q, ep)}};
        const std::uint32_t start = std::min(top_, level);
        for (std::int32_t lc = static_cast<std::int32_t>(start); lc >= 0; --lc) {
            auto found = search_layer(q, entry_points, cfg_.efc, static_cast<std::uint32_t>(lc));
            auto selected = select_neighbors(found, cfg_.M);
            links_[id][lc] = selected;
            const std::uint32_t cap = lc == 0 ? 2 * cfg_.M : cfg_.M;
            for (std::uint32_t nb : selected) {
                auto& reverse = links_[nb][lc];
                reverse.push_back(id);
                if (reverse.size() > cap) {
                    shrink(nb, static_cast<std::uint32_t>(lc), cap);
                }
            }
            entry_points = std::move(found);
        }
        if (level > top_) {
            top_ = level;
            entry_ = id;
        }
    }

    GraphIndex finalize() const {
        std::vector<GraphIndex::Layer> layers(top_ + 1);
        for (std::uint32_t li = 0; li <= top_; ++li) {
            GraphIndex::Layer& layer = layers[li];
            layer.offsets.push_back(0);
            for (std::uint32_t id = 0; id < n_; ++id) {
                if (levels_[id] < li) {
                    continue;
                }
                layer.nodes.push_back(id);
                const auto& lnk = links_[id][li];
                layer.neighbors.insert(layer.neighbors.end(), lnk.begin(), lnk.end());
                layer.offsets.push_back(layer.neighbors.size());
            }
        }
        return GraphIndex(cfg_, entry_, std::move(layers));
    }

    const float* data_;
    std::size_t n_;
    std::size_t dim_;
    GraphBuildConfig cfg_;
    Rng rng_;
    double level_scale_;
    std::uint32_t entry_ = 0;
    std::uint32_t top_ = 0;
    std::uint32_t generation_ = 0;
    std::vector<std::uint32_t> stamp_;
    std::vector<std::uint32_t> levels_;
    std::vector<std::vector<std::vector<std::uint32_t>>> links_; // [node][layer]
};

} // namespace detail

inline GraphIndex GraphIndex::build(const float* data, std::size_t n, std::size_t dim,
                                    const GraphBuildConfig& config) {
    if (n == 0) {
        throw std::invalid_argument("build_graph: empty dataset");
    }
    if (config.M < 2) {
        throw std::invalid_argument("build_graph: M must be >= 2");
    }
    if (config.efc < config.M) {
        throw std::invalid_argument("build_graph: efc must be >= M");
    }
    if (n > std::numeric_limits<std::uint32_t>::max()) {
        throw std::invalid_argument("build_graph: dataset too large for 32-bit ids");
    }
    detail::HnswBuilder builder(data, n, dim, config);
    return builder.run();
}

inline GraphIndex GraphIndex::from_layer0(std::vector<std::vector<std::uint32_t>> adjacency,
                                          std::uint32_t entry_node, std::uint32_t max_degree) {
    if (adjacency.empty()) {
        throw std::invalid_argument("from_layer0: empty adjacency");
    }
    std::uint32_t observed = 2;
    for (const auto& lnk : adjacency) {
        observed = std::max(observed, static_cast<std::uint32_t>(lnk.size()));
    }
    GraphBuildConfig cfg;
    cfg.M = max_degree != 0 ? max_degree : observed;
    cfg.efc = cfg.M;
    cfg.seed = 0;
    GraphIndex::Layer layer;
    layer.offsets.push_back(0);
    for (std::uint32_t id = 0; id < adjacency.size(); ++id) {
        layer.nodes.push_back(id);
        layer.neighbors.insert(layer.neighbors.end(), adjacency[id].begin(), adjacency[id].end());
        layer.offsets.push_back(layer.neighbors.size());
    }
    std::vector<Layer> layers;
    layers.push_back(std::move(layer));
    return GraphIndex(cfg, entry_node, std::move(layers));
}

inline GraphIndex build_graph(const Dataset& dataset, std::uint32_t M, std::uint32_t efc, std::uint64_t seed) {
    return GraphIndex::build(dataset.vector_data(), dataset.size(), dataset.dim(), {M, efc, seed});
}

// ---------------------------------------------------------------------------
// Query-time routing and plain unfiltered search
// ---------------------------------------------------------------------------

// Greedy descent through the routing layers; returns the layer-0 arrival.
inline std::uint32_t select_entry_point(const GraphIndex& graph, const float* base, std::size_t dim, const float* q,
                                        std::uint64_t* dist_comps) {
    std::uint32_t cur = graph.entry_node();
    double best = detail::squared_l2_raw(q, base + static_cast<std::size_t>(cur) * dim, dim);
    ++*dist_comps;
    for (std::size_t layer = graph.num_layers(); layer-- > 1;) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (std::uint32_t nb : graph.neighbors(layer, cur)) {
                const double d = detail::squared_l2_raw(q, base + static_cast<std::size_t>(nb) * dim, dim);
                ++*dist_comps;
                if (d < best) {
                    best = d;
                    cur = nb;
                    improved = true;
                }
            }
        }
    }
    return cur;
}

// Standard best-first layer-0 search with a fixed beam; no predicate.
inline std::vector<ScoredRecord> knn_search(const GraphIndex& graph, const float* base, std::size_t dim,
                                            const float* q, std::uint32_t k, std::uint32_t ef,
                                            std::uint64_t* dist_comps) {
    const std::uint32_t beam = std::max(ef, k);
    const std::uint32_t ep = select_entry_point(graph, base, dim, q, dist_comps);
    Bitmap visited(graph.size());
    MinDistHeap candidates;
    MaxDistHeap best;
    visited.set(ep);
    const ScoredRecord e{ep, detail::squared_l2_raw(q, base + static_cast<std::size_t>(ep) * dim, dim)};
    ++*dist_comps;
    candidates.push(e);
    best.push(e);
    while (!candidates.empty()) {
        const ScoredRecord c = candidates.pop();
        if (best.size() >= beam && c.dist > best.top().dist) {
            break;
        }
        for (std::uint32_t nb : graph.neighbors0(c.record_id)) {
            if (visited.test(nb)) {
                continue;
            }
            visited.set(nb);
            const double d = detail::squared_l2_raw(q, base + static_cast<std::size_t>(nb) * dim, dim);
            ++*dist_comps;
            if (best.size() < beam || d < best.top().dist) {
                candidates.push({nb, d});
                best.push({nb, d});
                if (best.size() > beam) {
                    best.pop();
                }
            }
        }
    }
    auto all = best.sorted();
    if (all.size() > k) {
        all.resize(k);
    }
    return all;
}

// Fraction of a node's layer-0 neighbors satisfying the predicate; counts
// every neighbor, visited or not. Zero neighbors yields 0.
inline double neighborhood_passrate(const GraphIndex& graph, const Dataset& dataset, std::uint32_t node,
                                    const Predicate& p) {
    const auto nbrs = graph.neighbors0(node);
    if (nbrs.empty()) {
        return 0.0;
    }
    std::size_t passing = 0;
    for (std::uint32_t nb : nbrs) {
        if (evaluate_predicate(p, dataset.attributes_of(nb))) {
            ++passing;
        }
    }
    return static_cast<double>(passing) / static_cast<double>(nbrs.size());
}

// ---------------------------------------------------------------------------
// Progressive filtered traversal
// ---------------------------------------------------------------------------

// Traversal context over dataset records.
struct RecordSearchContext {
    const Dataset* dataset = nullptr;
    const Predicate* predicate = nullptr;
    const float* query = nullptr;
    QueryCounters* counters = nullptr;

    const float* base() const { return dataset->vector_data(); }
    std::size_t dim() const { return dataset->dim(); }
    const float* query_ptr() const { return query; }
    QueryCounters* query_counters() const { return counters; }
    std::uint64_t* routing_counter() const { return &counters->routing_dist_comps; }

    double visit_distance(std::uint32_t id) const {
        ++counters->dist_comps;
        return detail::squared_l2_raw(query, base() + static_cast<std::size_t>(id) * dim(), dim());
    }

    bool passes(std::uint32_t id) const {
        ++counters->predicate_evals;
        return evaluate_predicate(*predicate, dataset->attributes_of(id));
    }
};

// Traversal context over IVF centroids; the predicate is constant true and
// distance work is tracked separately from record-level work.
struct CentroidSearchContext {
    const float* centroids = nullptr;
    std::size_t dim_ = 0;
    const float* query = nullptr;
    QueryCounters* counters = nullptr;

    const float* base() const { return centroids; }
    std::size_t dim() const { return dim_; }
    const float* query_ptr() const { return query; }
    QueryCounters* query_counters() const { return counters; }
    std::uint64_t* routing_counter() const { return &counters->centroid_dist_comps; }

    double visit_distance(std::uint32_t id) const {
        ++counters->centroid_dist_comps;
        return detail::squared_l2_raw(query, centroids + static_cast<std::size_t>(id) * dim_, dim_);
    }

    bool passes(std::uint32_t) const { return true; }
};

// Pull-based iterator over a proximity graph that widens its internal beam
// in discrete steps. The candidate queue and visited bitmap live in the
// SharedSearchState so a cooperating relational iterator can contribute to
// and observe the same frontier.
template <class Context>
class ProgressiveCursor {
  public:
    struct Batch {
        std::vector<ScoredRecord> records;
        double sel = 0.0;
    };

    ProgressiveCursor(const GraphIndex& graph, Context context, SharedSearchState& shared,
                      std::uint32_t batch_limit, std::uint32_t delta_efs, double alpha, double beta)
        : graph_(&graph)
        , ctx_(context)
        , shared_(&shared)
        , pushed_(graph.size())
        , passed_(graph.size())
        , batch_limit_(batch_limit)
        , delta_efs_(delta_efs)
        , alpha_(alpha)
        , beta_(beta) {
        if (shared.visited.size() != graph.size()) {
            throw std::invalid_argument("ProgressiveCursor: bitmap size mismatch");
        }
        if (delta_efs_ == 0 || batch_limit_ == 0) {
            throw std::invalid_argument("ProgressiveCursor: batch and step sizes must be positive");
        }
    }

    // Routes to the layer-0 entry point and performs its first visit. The
    // shared queue and bitmap must be untouched for this query.
    void open() {
        const std::uint32_t entry =
            select_entry_point(*graph_, ctx_.base(), ctx_.dim(), ctx_.query_ptr(), ctx_.routing_counter());
        visit(entry, ctx_.passes(entry));
    }

    // One traversal step: widen the beam, expand candidates until the beam
    // bound is hit or the neighborhood passrate collapses, then emit up to
    // batch_limit close passing records. sel is the last passrate observed,
    // or 0 when the shared queue was already empty.
    Batch next() {
        expand_search();
        Batch out;
        const bool had_candidates = !shared_->candidates.empty();
        while (!shared_->candidates.empty()) {
            const ScoredRecord cand = shared_->candidates.pop();
            if (efs_ > 0 && top_.size() == efs_ && cand.dist > top_.top().dist) {
                break;
            }
            const double sel = neighborhood_sel(cand.record_id);
            last_sel_ = sel;
            if (sel >= alpha_) {
                ++ctx_.query_counters()->one_hop_branches;
                one_hop_expand(cand.record_id);
            } else if (sel >= beta_) {
                ++ctx_.query_counters()->two_hop_branches;
                two_hop_expand(cand.record_id);
            } else {
                ++ctx_.query_counters()->pivot_breaks;
                break;
            }
        }
        out.sel = had_candidates ? last_sel_ : 0.0;
        for (std::uint32_t i = 0; i < batch_limit_ && !result_.empty(); ++i) {
            out.records.push_back(result_.pop());
        }
        return out;
    }

    // Widens the beam by one step and reinstates recycled records until the
    // new beam is full. Records that never reached the shared queue are
    // published now.
    void expand_search() {
        efs_ += delta_efs_;
        while (!recycle_.empty() && top_.size() < efs_) {
            const ScoredRecord r = recycle_.pop();
            top_.push(r);
            if (!pushed_.test(r.record_id)) {
                --unshared_recycled_;
                pushed_.set(r.record_id);
                shared_->candidates.push(r);
                if (passed_.test(r.record_id)) {
                    result_.push(r);
                }
            }
        }
    }

    // Visits one unvisited record: flags it, computes its distance exactly
    // once, and routes it into the queues.
    void visit(std::uint32_t id, bool passed) {
        if (shared_->visited.test(id)) {
            throw std::logic_error("visit: record already visited");
        }
        shared_->visited.set(id);
        if (passed) {
            passed_.set(id);
        }
        const ScoredRecord r{id, ctx_.visit_distance(id)};
        if (top_.size() < efs_ || top_.empty() || r.dist < top_.top().dist) {
            pushed_.set(id);
            shared_->candidates.push(r);
            top_.push(r);
            while (top_.size() > efs_) {
                to_recycle(top_.pop());
            }
            if (passed) {
                result_.push(r);
            }
        } else {
            to_recycle(r);
        }
    }

    void one_hop_expand(std::uint32_t node) {
        for (std::uint32_t nb : graph_->neighbors0(node)) {
            if (!shared_->visited.test(nb)) {
                visit(nb, ctx_.passes(nb));
            }
        }
    }

    // Visits passing one-hop neighbors, then passing two-hop neighbors in
    // adjacency order up to 2M new visits. Failing records get an attribute
    // check but no distance computation here.
    void two_hop_expand(std::uint32_t node) {
        const auto nbrs = graph_->neighbors0(node);
        for (std::uint32_t nb : nbrs) {
            if (!shared_->visited.test(nb) && ctx_.passes(nb)) {
                visit(nb, true);
            }
        }
        const std::uint32_t cap = 2 * graph_->max_degree();
        std::uint32_t visits = 0;
        for (std::uint32_t nb : nbrs) {
            for (std::uint32_t nb2 : graph_->neighbors0(nb)) {
                if (visits >= cap) {
                    return;
                }
                if (!shared_->visited.test(nb2) && ctx_.passes(nb2)) {
                    visit(nb2, true);
                    ++visits;
                }
            }
        }
    }

    // No more records can ever be produced: the shared frontier is drained,
    // nothing is queued for emission, and every recycled record has already
    // been published to the shared queue.
    bool exhausted() const {
        return shared_->candidates.empty() && result_.empty() && unshared_recycled_ == 0;
    }

    std::uint32_t efs() const { return efs_; }
    double last_sel() const { return last_sel_; }
    const MaxDistHeap& top_queue() const { return top_; }
    const MinDistHeap& recycle_queue() const { return recycle_; }
    const MinDistHeap& result_queue() const { return result_; }
    const Bitmap& pushed_to_shared() const { return pushed_; }

  private:
    double neighborhood_sel(std::uint32_t node) const {
        const auto nbrs = graph_->neighbors0(node);
        if (nbrs.empty()) {
            return 0.0;
        }
        std::size_t passing = 0;
        for (std::uint32_t nb : nbrs) {
            if (ctx_.passes(nb)) {
                ++passing;
            }
        }
        return static_cast<double>(passing) / static_cast<double>(nbrs.size());
    }

    void to_recycle(const ScoredRecord& r) {
        if (!pushed_.test(r.record_id)) {
            ++unshared_recycled_;
        }
        recycle_.push(r);
    }

    const GraphIndex* graph_;
    Context ctx_;
    SharedSearchState* shared_;
    MaxDistHeap top_;      // beam of the efs_ closest visited records
    MinDistHeap recycle_;  // visited records currently outside the beam
    MinDistHeap result_;   // visited passing records awaiting emission
    Bitmap pushed_;        // ids ever added to the shared queue
    Bitmap passed_;        // predicate outcome cached at visit time
    std::uint32_t batch_limit_;
    std::uint32_t delta_efs_;
    double alpha_;
    double beta_;
    std::uint32_t efs_ = 0;
    double last_sel_ = 1.0;
    std::size_t unshared_recycled_ = 0;
};

using GraphCursor = ProgressiveCursor<RecordSearchContext>;

inline GraphCursor graph_open(const GraphIndex& graph, const Dataset& dataset, const float* query,
                              const Predicate& predicate, SharedSearchState& shared, QueryCounters& counters,
                              std::uint32_t k, const SearchConfig& config) {
    GraphCursor cursor(graph, RecordSearchContext{&dataset, &predicate, query, &counters}, shared, k,
                       config.delta_efs_or_default(k), config.alpha, config.beta);
    cursor.open();
    return cursor;
}

} // namespace compass
