#include "glitchhunter/leiden.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <ostream>

#include <json.hpp>

#include "glitchhunter/error.hpp"
#include "glitchhunter/util.hpp"

namespace glitchhunter::leiden {

namespace {

constexpr double kGainEps = 1e-12;
// Temperature of the randomized refinement step.
constexpr double kRefineTheta = 0.05;

// Working graph for the aggregation hierarchy. Nodes carry the number of
// original tokens they stand for plus the edge weight already collapsed
// inside them; both feed the quality bookkeeping.
struct WorkGraph {
    std::size_t n = 0;
    std::vector<std::size_t> offsets;
    std::vector<std::uint32_t> nbr;
    std::vector<double> w;
    std::vector<double> self_loop;
    std::vector<std::int64_t> size;
    std::vector<double> strength;  // incident edge weight + 2 * self_loop
    double total_weight = 0.0;     // edge weights + self loops
};

WorkGraph from_teg(const teg::TokenEmbeddingGraph& g) {
    WorkGraph wg;
    wg.n = g.node_count;
    wg.offsets = g.offsets;
    wg.nbr = g.nbr;
    wg.w = g.nbr_weight;
    wg.self_loop.assign(wg.n, 0.0);
    wg.size.assign(wg.n, 1);
    wg.strength.assign(wg.n, 0.0);
    for (std::size_t v = 0; v < wg.n; ++v)
        for (std::size_t e = wg.offsets[v]; e < wg.offsets[v + 1]; ++e)
            wg.strength[v] += wg.w[e];
    wg.total_weight = g.total_weight;
    return wg;
}

struct CommunityStats {
    std::vector<std::int64_t> size;
    std::vector<double> strength;
    std::vector<std::uint32_t> free_labels;  // reusable empty labels, LIFO

    void init(const WorkGraph& g, const std::vector<std::uint32_t>& comm) {
        size.assign(g.n, 0);
        strength.assign(g.n, 0.0);
        for (std::size_t v = 0; v < g.n; ++v) {
            size[comm[v]] += g.size[v];
            strength[comm[v]] += g.strength[v];
        }
        free_labels.clear();
        for (std::size_t c = g.n; c-- > 0;)
            if (size[c] == 0) free_labels.push_back(std::uint32_t(c));
    }
};

// Gain of moving node v (currently in `from`) into community `to`, given the
// weight of v's edges into each side. `to` may be an empty label.
double move_gain(const WorkGraph& g, double resolution, Objective obj, std::uint32_t v,
                 double w_to_target, double w_to_current, const CommunityStats& st,
                 std::uint32_t from, std::uint32_t to) {
    double link_gain = w_to_target - w_to_current;
    if (obj == Objective::Cpm) {
        double sv = double(g.size[v]);
        double penalty = resolution * sv * (double(st.size[to]) - double(st.size[from]) + sv);
        return link_gain - penalty;
    }
    double sv = g.strength[v];
    double penalty =
        resolution * sv * (st.strength[to] - st.strength[from] + sv) / (2.0 * g.total_weight);
    return link_gain - penalty;
}

// Queue-based local moving. Returns the number of moves performed.
std::size_t local_move(const WorkGraph& g, double resolution, Objective obj, util::Rng& rng,
                       std::vector<std::uint32_t>& comm, CommunityStats& st) {
    std::vector<std::uint32_t> order(g.n);
    for (std::size_t i = 0; i < g.n; ++i) order[i] = std::uint32_t(i);
    rng.shuffle(order);

    std::deque<std::uint32_t> queue(order.begin(), order.end());
    std::vector<char> in_queue(g.n, 1);
    std::vector<double> w_to(g.n, 0.0);
    std::vector<std::uint32_t> touched;
    std::size_t moves = 0;

    while (!queue.empty()) {
        std::uint32_t v = queue.front();
        queue.pop_front();
        in_queue[v] = 0;

        touched.clear();
        for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
            std::uint32_t c = comm[g.nbr[e]];
            if (w_to[c] == 0.0) touched.push_back(c);
            w_to[c] += g.w[e];
        }

        std::uint32_t cur = comm[v];
        double w_cur = w_to[cur];
        double best_gain = 0.0;
        std::uint32_t best = cur;
        for (std::uint32_t c : touched) {
            if (c == cur) continue;
            double gain = move_gain(g, resolution, obj, v, w_to[c], w_cur, st, cur, c);
            if (gain > best_gain + kGainEps) {
                best_gain = gain;
                best = c;
            }
        }
        // A fresh singleton community is the escape hatch for nodes whose
        // penalty outweighs their links.
        if (!st.free_labels.empty()) {
            std::uint32_t empty = st.free_labels.back();
            double gain = move_gain(g, resolution, obj, v, 0.0, w_cur, st, cur, empty);
            if (gain > best_gain + kGainEps) {
                best_gain = gain;
                best = empty;
            }
        }

        if (best != cur && best_gain > kGainEps) {
            if (st.size[best] == 0) st.free_labels.pop_back();
            st.size[cur] -= g.size[v];
            st.strength[cur] -= g.strength[v];
            st.size[best] += g.size[v];
            st.strength[best] += g.strength[v];
            if (st.size[cur] == 0) st.free_labels.push_back(cur);
            comm[v] = best;
            ++moves;
            for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
                std::uint32_t u = g.nbr[e];
                if (comm[u] != best && !in_queue[u]) {
                    queue.push_back(u);
                    in_queue[u] = 1;
                }
            }
        }

        for (std::uint32_t c : touched) w_to[c] = 0.0;
    }
    return moves;
}

// Refinement: within each community of `comm`, grow well-connected refined
// groups from singletons. Merges are restricted to non-negative gains and
// picked with probability proportional to exp(gain/theta).
std::vector<std::uint32_t> refine(const WorkGraph& g, double resolution, Objective obj,
                                  util::Rng& rng, const std::vector<std::uint32_t>& comm) {
    std::vector<std::uint32_t> ref(g.n);
    for (std::size_t v = 0; v < g.n; ++v) ref[v] = std::uint32_t(v);

    // Group members per community, ascending node id.
    std::vector<std::vector<std::uint32_t>> members(g.n);
    for (std::size_t v = 0; v < g.n; ++v) members[comm[v]].push_back(std::uint32_t(v));

    std::vector<double> conn(g.n, 0.0);       // w(v, S \ v) within its community
    std::vector<double> ref_eint(g.n, 0.0);   // internal weight of refined group
    std::vector<double> ref_conn(g.n, 0.0);   // sum of member conn values
    std::vector<std::int64_t> ref_size(g.n, 0);
    std::vector<double> ref_strength(g.n, 0.0);
    std::vector<double> w_to(g.n, 0.0);
    std::vector<std::uint32_t> touched;
    std::vector<std::uint32_t> candidates;
    std::vector<double> cand_gain;

    for (std::uint32_t s_label = 0; s_label < g.n; ++s_label) {
        const auto& S = members[s_label];
        if (S.size() <= 1) continue;

        std::int64_t S_size = 0;
        double S_strength = 0.0;
        for (std::uint32_t v : S) {
            S_size += g.size[v];
            S_strength += g.strength[v];
        }
        for (std::uint32_t v : S) {
            double c = 0.0;
            for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e)
                if (comm[g.nbr[e]] == s_label) c += g.w[e];
            conn[v] = c;
            ref_size[v] = g.size[v];
            ref_strength[v] = g.strength[v];
            ref_conn[v] = c;
            ref_eint[v] = 0.0;
        }

        auto node_well_connected = [&](std::uint32_t v) {
            if (obj == Objective::Cpm)
                return conn[v] >=
                       resolution * double(g.size[v]) * double(S_size - g.size[v]) - 1e-12;
            return conn[v] >= resolution * g.strength[v] * (S_strength - g.strength[v]) /
                                  (2.0 * g.total_weight) -
                              1e-12;
        };
        auto group_well_connected = [&](std::uint32_t c) {
            double cut = ref_conn[c] - 2.0 * ref_eint[c];
            if (obj == Objective::Cpm)
                return cut >= resolution * double(ref_size[c]) * double(S_size - ref_size[c]) - 1e-12;
            return cut >= resolution * ref_strength[c] * (S_strength - ref_strength[c]) /
                              (2.0 * g.total_weight) -
                          1e-12;
        };

        std::vector<std::uint32_t> order(S);
        rng.shuffle(order);
        for (std::uint32_t v : order) {
            if (ref_size[ref[v]] != g.size[v] || ref[v] != v) continue;  // no longer singleton
            if (!node_well_connected(v)) continue;

            touched.clear();
            for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
                std::uint32_t u = g.nbr[e];
                if (comm[u] != s_label) continue;
                std::uint32_t c = ref[u];
                if (c == v) continue;
                if (w_to[c] == 0.0) touched.push_back(c);
                w_to[c] += g.w[e];
            }

            candidates.clear();
            cand_gain.clear();
            double max_gain = 0.0;
            for (std::uint32_t c : touched) {
                if (!group_well_connected(c)) continue;
                double gain;
                if (obj == Objective::Cpm)
                    gain = w_to[c] - resolution * double(g.size[v]) * double(ref_size[c]);
                else
                    gain = w_to[c] - resolution * g.strength[v] * ref_strength[c] /
                                         (2.0 * g.total_weight);
                if (gain >= 0.0) {
                    candidates.push_back(c);
                    cand_gain.push_back(gain);
                    max_gain = std::max(max_gain, gain);
                }
            }

            if (!candidates.empty()) {
                double total = 0.0;
                for (double& p : cand_gain) {
                    p = std::exp((p - max_gain) / kRefineTheta);
                    total += p;
                }
                double r = rng.uniform() * total;
                std::size_t pick = 0;
                double acc = 0.0;
                for (std::size_t i = 0; i < candidates.size(); ++i) {
                    acc += cand_gain[i];
                    if (r < acc) {
                        pick = i;
                        break;
                    }
                    pick = i;
                }
                std::uint32_t c = candidates[pick];
                ref_eint[c] += w_to[c];
                ref_conn[c] += conn[v];
                ref_size[c] += g.size[v];
                ref_strength[c] += g.strength[v];
                ref_size[v] = 0;
                ref[v] = c;
            }

            for (std::uint32_t c : touched) w_to[c] = 0.0;
        }
    }
    return ref;
}

// Dense renumbering by first occurrence in index order. Input labels may come
// from a larger label space than the index range (aggregation shrinks the node
// count before its community labels are renumbered).
std::vector<std::uint32_t> renumber(const std::vector<std::uint32_t>& labels) {
    std::uint32_t mx = 0;
    for (std::uint32_t l : labels) mx = std::max(mx, l);
    std::vector<std::uint32_t> map(labels.empty() ? 0 : std::size_t(mx) + 1, UINT32_MAX);
    std::vector<std::uint32_t> out(labels.size());
    std::uint32_t next = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (map[labels[i]] == UINT32_MAX) map[labels[i]] = next++;
        out[i] = map[labels[i]];
    }
    return out;
}

struct Aggregated {
    WorkGraph graph;
    std::vector<std::uint32_t> node_of;  // old node -> new node
    std::vector<std::uint32_t> comm;     // induced partition on new nodes
};

Aggregated aggregate(const WorkGraph& g, const std::vector<std::uint32_t>& ref,
                     const std::vector<std::uint32_t>& comm) {
    Aggregated out;
    out.node_of = renumber(ref);
    std::size_t nn = 0;
    for (std::uint32_t c : out.node_of) nn = std::max<std::size_t>(nn, c + 1);

    WorkGraph& ng = out.graph;
    ng.n = nn;
    ng.self_loop.assign(nn, 0.0);
    ng.size.assign(nn, 0);
    ng.strength.assign(nn, 0.0);
    ng.total_weight = g.total_weight;
    out.comm.assign(nn, 0);

    for (std::size_t v = 0; v < g.n; ++v) {
        std::uint32_t c = out.node_of[v];
        ng.size[c] += g.size[v];
        ng.self_loop[c] += g.self_loop[v];
        out.comm[c] = comm[v];  // all members share the same parent community
    }

    // Sum parallel edges between refined groups; internal weight becomes a
    // self loop. Edges visited once via u < v on the new labels.
    std::vector<std::vector<std::pair<std::uint32_t, double>>> acc(nn);
    for (std::size_t v = 0; v < g.n; ++v) {
        std::uint32_t cv = out.node_of[v];
        for (std::size_t e = g.offsets[v]; e < g.offsets[v + 1]; ++e) {
            std::uint32_t u = g.nbr[e];
            std::uint32_t cu = out.node_of[u];
            if (cv < cu)
                acc[cv].emplace_back(cu, g.w[e]);
            else if (cv == cu && v < u)
                ng.self_loop[cv] += g.w[e];
        }
    }
    ng.offsets.assign(nn + 1, 0);
    std::vector<std::vector<std::pair<std::uint32_t, double>>> merged(nn);
    for (std::size_t c = 0; c < nn; ++c) {
        auto& row = acc[c];
        std::sort(row.begin(), row.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        auto& m = merged[c];
        for (const auto& [u, w] : row) {
            if (!m.empty() && m.back().first == u)
                m.back().second += w;
            else
                m.emplace_back(u, w);
        }
    }
    std::vector<std::size_t> degree(nn, 0);
    for (std::size_t c = 0; c < nn; ++c) {
        for (const auto& [u, w] : merged[c]) {
            ++degree[c];
            ++degree[u];
        }
    }
    for (std::size_t c = 0; c < nn; ++c) ng.offsets[c + 1] = ng.offsets[c] + degree[c];
    ng.nbr.resize(ng.offsets[nn]);
    ng.w.resize(ng.offsets[nn]);
    std::vector<std::size_t> cursor(ng.offsets.begin(), ng.offsets.end() - 1);
    for (std::size_t c = 0; c < nn; ++c) {
        for (const auto& [u, w] : merged[c]) {
            ng.nbr[cursor[c]] = u;
            ng.w[cursor[c]++] = w;
            ng.nbr[cursor[u]] = std::uint32_t(c);
            ng.w[cursor[u]++] = w;
        }
    }
    for (std::size_t v = 0; v < nn; ++v) {
        double s = 2.0 * ng.self_loop[v];
        for (std::size_t e = ng.offsets[v]; e < ng.offsets[v + 1]; ++e) s += ng.w[e];
        ng.strength[v] = s;
    }
    return out;
}

void validate_partition(const teg::TokenEmbeddingGraph& graph, const Partition& partition) {
    if (partition.size() != graph.node_count)
        throw Error(Errc::InvalidPartition, "partition size does not match node count");
    for (std::uint32_t c : partition)
        if (c >= graph.node_count)
            throw Error(Errc::InvalidPartition, "community label out of range");
}

// Splits communities that are not internally connected into their components.
// Never decreases either quality: internal weight is preserved while the
// size/strength penalty terms are superadditive.
Partition split_disconnected(const teg::TokenEmbeddingGraph& graph, const Partition& partition) {
    Partition out(partition.size(), UINT32_MAX);
    std::uint32_t next = 0;
    std::vector<std::uint32_t> stack;
    for (std::size_t start = 0; start < partition.size(); ++start) {
        if (out[start] != UINT32_MAX) continue;
        std::uint32_t label = next++;
        stack.push_back(std::uint32_t(start));
        out[start] = label;
        while (!stack.empty()) {
            std::uint32_t v = stack.back();
            stack.pop_back();
            for (std::size_t e = graph.offsets[v]; e < graph.offsets[v + 1]; ++e) {
                std::uint32_t u = graph.nbr[e];
                if (out[u] == UINT32_MAX && partition[u] == partition[v]) {
                    out[u] = label;
                    stack.push_back(u);
                }
            }
        }
    }
    return out;
}

LeidenResult run_once(const teg::TokenEmbeddingGraph& graph, const LeidenParams& params,
                      std::uint64_t seed) {
    util::Rng rng(seed);
    LeidenResult result;

    WorkGraph g = from_teg(graph);
    std::vector<std::uint32_t> orig_to_node(graph.node_count);
    for (std::size_t i = 0; i < graph.node_count; ++i) orig_to_node[i] = std::uint32_t(i);
    std::vector<std::uint32_t> comm(g.n);
    for (std::size_t i = 0; i < g.n; ++i) comm[i] = std::uint32_t(i);
    CommunityStats st;
    st.init(g, comm);

    auto flatten = [&]() {
        Partition flat(graph.node_count);
        for (std::size_t i = 0; i < graph.node_count; ++i) flat[i] = comm[orig_to_node[i]];
        return renumber(flat);
    };

    for (int pass = 0; pass < params.max_passes; ++pass) {
        std::size_t moves = local_move(g, params.resolution, params.objective, rng, comm, st);
        Partition flat = flatten();
        result.pass_quality.push_back(
            quality(graph, flat, params.resolution, params.objective));

        bool all_singleton_nodes = community_count(renumber(comm)) == g.n;
        if (moves == 0 && all_singleton_nodes) break;

        std::vector<std::uint32_t> ref = refine(g, params.resolution, params.objective, rng, comm);
        Aggregated agg = aggregate(g, ref, comm);
        if (agg.graph.n == g.n && moves == 0) break;  // refinement kept everything apart
        for (std::size_t i = 0; i < graph.node_count; ++i)
            orig_to_node[i] = agg.node_of[orig_to_node[i]];
        g = std::move(agg.graph);
        comm = renumber(agg.comm);
        st.init(g, comm);
    }

    result.partition = renumber(split_disconnected(graph, flatten()));
    result.quality = quality(graph, result.partition, params.resolution, params.objective);
    return result;
}

}  // namespace

double cpm_quality(const teg::TokenEmbeddingGraph& graph, const Partition& partition,
                   double resolution) {
    validate_partition(graph, partition);
    std::size_t c_count = community_count(partition);
    std::vector<double> internal(c_count, 0.0);
    std::vector<std::int64_t> size(c_count, 0);
    for (std::size_t v = 0; v < partition.size(); ++v) ++size[partition[v]];
    for (const teg::Edge& e : graph.edges)
        if (partition[e.u] == partition[e.v]) internal[partition[e.u]] += e.weight;
    double q = 0.0;
    for (std::size_t c = 0; c < c_count; ++c)
        q += internal[c] - resolution * double(size[c]) * double(size[c] - 1) / 2.0;
    return q;
}

double rb_quality(const teg::TokenEmbeddingGraph& graph, const Partition& partition,
                  double resolution) {
    validate_partition(graph, partition);
    if (graph.total_weight <= 0.0) return 0.0;
    std::size_t c_count = community_count(partition);
    std::vector<double> internal(c_count, 0.0);
    std::vector<double> strength(c_count, 0.0);
    for (const teg::Edge& e : graph.edges) {
        if (partition[e.u] == partition[e.v]) internal[partition[e.u]] += e.weight;
        strength[partition[e.u]] += e.weight;
        strength[partition[e.v]] += e.weight;
    }
    double q = 0.0;
    for (std::size_t c = 0; c < c_count; ++c)
        q += internal[c] - resolution * strength[c] * strength[c] / (4.0 * graph.total_weight);
    return q;
}

double quality(const teg::TokenEmbeddingGraph& graph, const Partition& partition,
               double resolution, Objective objective) {
    return objective == Objective::Cpm ? cpm_quality(graph, partition, resolution)
                                       : rb_quality(graph, partition, resolution);
}

LeidenResult run(const teg::TokenEmbeddingGraph& graph, const LeidenParams& params) {
    if (graph.node_count == 0) throw Error(Errc::EmptyMatrix, "leiden on empty graph");
    int restarts = std::max(1, params.restarts);
    LeidenResult best;
    bool have = false;
    for (int r = 0; r < restarts; ++r) {
        std::uint64_t sub_seed = util::splitmix64(params.seed ^ (std::uint64_t(r) * 0x9E3779B97F4A7C15ULL));
        LeidenResult candidate = run_once(graph, params, sub_seed);
        if (!have || candidate.quality > best.quality + 1e-12) {
            best = std::move(candidate);
            have = true;
        }
    }
    return best;
}

std::size_t community_count(const Partition& partition) {
    std::uint32_t mx = 0;
    for (std::uint32_t c : partition) mx = std::max(mx, c);
    return partition.empty() ? 0 : std::size_t(mx) + 1;
}

std::vector<std::vector<TokenId>> communities_of(const Partition& partition) {
    std::vector<std::vector<TokenId>> out(community_count(partition));
    for (std::size_t v = 0; v < partition.size(); ++v) out[partition[v]].push_back(TokenId(v));
    return out;
}

void dump_partition_json(const Partition& partition, std::ostream& out) {
    nlohmann::json j = nlohmann::json::array();
    for (std::uint32_t c : partition) j.push_back(c);
    out << j.dump() << "\n";
}

}  // namespace glitchhunter::leiden
