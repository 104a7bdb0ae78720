#include "glitchhunter/teg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <unordered_map>

#include <json.hpp>

#include "glitchhunter/error.hpp"

namespace glitchhunter::teg {

namespace {

double squared_distance(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t c = 0; c < a.size(); ++c) {
        double d = double(a[c]) - double(b[c]);
        acc += d * d;
    }
    return acc;
}

// Fills one output row: the k nearest of row i by (distance, id).
void knn_row(const EmbeddingMatrix& matrix, std::size_t i, std::uint32_t k,
             std::vector<std::pair<double, TokenId>>& scratch, TokenId* out_ids,
             double* out_dists) {
    const std::size_t n = matrix.rows;
    scratch.clear();
    std::span<const float> xi = matrix.row(i);
    for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        scratch.emplace_back(squared_distance(xi, matrix.row(j)), TokenId(j));
    }
    std::partial_sort(scratch.begin(), scratch.begin() + k, scratch.end());
    for (std::uint32_t r = 0; r < k; ++r) {
        out_ids[r] = scratch[r].second;
        out_dists[r] = std::sqrt(scratch[r].first);
    }
}

std::uint32_t effective_k(const EmbeddingMatrix& matrix, std::uint32_t k) {
    if (matrix.rows == 0) throw Error(Errc::EmptyMatrix, "knn on empty matrix");
    if (matrix.rows < 2) throw Error(Errc::DegenerateInput, "knn needs at least two rows");
    if (k == 0) throw Error(Errc::DegenerateInput, "knn needs k >= 1");
    return std::min<std::uint32_t>(k, std::uint32_t(matrix.rows - 1));
}

}  // namespace

KnnResult knn(const EmbeddingMatrix& matrix, std::uint32_t k) {
    const std::uint32_t keff = effective_k(matrix, k);
    const std::size_t n = matrix.rows;
    KnnResult out;
    out.n = n;
    out.k = keff;
    out.ids.resize(n * keff);
    out.dists.resize(n * keff);

#pragma omp parallel
    {
        std::vector<std::pair<double, TokenId>> scratch;
        scratch.reserve(n);
#pragma omp for schedule(static)
        for (long long i = 0; i < (long long)n; ++i) {
            knn_row(matrix, std::size_t(i), keff, scratch, out.ids.data() + std::size_t(i) * keff,
                    out.dists.data() + std::size_t(i) * keff);
        }
    }
    return out;
}

KnnResult reference::knn(const EmbeddingMatrix& matrix, std::uint32_t k) {
    const std::uint32_t keff = effective_k(matrix, k);
    const std::size_t n = matrix.rows;
    KnnResult out;
    out.n = n;
    out.k = keff;
    out.ids.resize(n * keff);
    out.dists.resize(n * keff);
    std::vector<std::pair<double, TokenId>> scratch;
    scratch.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        knn_row(matrix, i, keff, scratch, out.ids.data() + i * keff, out.dists.data() + i * keff);
    }
    return out;
}

SmoothParams smooth_params(std::span<const double> neighbor_dists, std::uint32_t k,
                           bool positive_rho) {
    if (neighbor_dists.empty()) throw Error(Errc::EmptyNeighbors, "smooth_params");

    SmoothParams p;
    p.rho = neighbor_dists[0];
    if (positive_rho) {
        p.rho = 0.0;
        for (double d : neighbor_dists) {
            if (d > 0.0) {
                p.rho = d;
                break;
            }
        }
    }

    const double target = std::log2(double(k));
    auto f = [&](double sigma) {
        double acc = 0.0;
        for (double d : neighbor_dists) acc += std::exp(-std::max(0.0, d - p.rho) / sigma);
        return acc;
    };

    double lo = kSigmaLo, hi = kSigmaHi;
    double f_lo = f(lo);
    if (f_lo > target) {
        p.sigma = lo;
        p.residual = f_lo - target;
        p.solvable = false;
        return p;
    }
    double f_hi = f(hi);
    if (f_hi < target) {
        p.sigma = hi;
        p.residual = target - f_hi;
        p.solvable = false;
        return p;
    }

    double mid = 0.5 * (lo + hi);
    for (int it = 0; it < kBisectIterations; ++it) {
        mid = 0.5 * (lo + hi);
        double val = f(mid);
        if (std::abs(val - target) <= kBisectTolerance) break;
        if (val < target)
            lo = mid;
        else
            hi = mid;
    }
    p.sigma = mid;
    p.residual = std::abs(f(mid) - target);
    p.solvable = true;
    return p;
}

std::vector<SmoothParams> smooth_all(const KnnResult& nn, const TegOptions& options) {
    std::vector<SmoothParams> out(nn.n);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < (long long)nn.n; ++i)
        out[std::size_t(i)] = smooth_params(nn.dists_of(std::size_t(i)), nn.k, options.positive_rho);
    return out;
}

std::vector<SmoothParams> reference::smooth_all(const KnnResult& nn, const TegOptions& options) {
    std::vector<SmoothParams> out(nn.n);
    for (std::size_t i = 0; i < nn.n; ++i)
        out[i] = smooth_params(nn.dists_of(i), nn.k, options.positive_rho);
    return out;
}

double t_conorm(double a, double b) {
    double w = a + b - a * b;
    return std::min(1.0, std::max({w, a, b}));
}

void TokenEmbeddingGraph::build_adjacency() {
    offsets.assign(node_count + 1, 0);
    for (const Edge& e : edges) {
        ++offsets[e.u + 1];
        ++offsets[e.v + 1];
    }
    for (std::size_t i = 0; i < node_count; ++i) offsets[i + 1] += offsets[i];
    nbr.resize(edges.size() * 2);
    nbr_weight.resize(edges.size() * 2);
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    total_weight = 0.0;
    for (const Edge& e : edges) {
        nbr[cursor[e.u]] = e.v;
        nbr_weight[cursor[e.u]++] = e.weight;
        nbr[cursor[e.v]] = e.u;
        nbr_weight[cursor[e.v]++] = e.weight;
        total_weight += e.weight;
    }
}

TokenEmbeddingGraph build_teg(const EmbeddingMatrix& matrix, std::uint32_t k,
                              const TegOptions& options) {
    if (matrix.rows < 2) throw Error(Errc::EmptyMatrix, "graph needs at least two rows");
    KnnResult nn = knn(matrix, k);
    std::vector<SmoothParams> smooth = smooth_all(nn, options);

    // Directional membership weights, keyed by the undirected pair. First
    // slot holds w(u->v), second w(v->u); a negative value means absent.
    std::unordered_map<std::uint64_t, std::pair<double, double>> pairs;
    pairs.reserve(nn.n * nn.k);
    const double w_floor = std::numeric_limits<double>::min();
    for (std::size_t i = 0; i < nn.n; ++i) {
        std::span<const TokenId> ids = nn.ids_of(i);
        std::span<const double> dists = nn.dists_of(i);
        for (std::uint32_t r = 0; r < nn.k; ++r) {
            TokenId j = ids[r];
            double w = std::exp(-std::max(0.0, dists[r] - smooth[i].rho) / smooth[i].sigma);
            w = std::min(1.0, std::max(w, w_floor));
            TokenId u = std::min<TokenId>(TokenId(i), j);
            TokenId v = std::max<TokenId>(TokenId(i), j);
            std::uint64_t key = (std::uint64_t(u) << 32) | v;
            auto [it, inserted] = pairs.try_emplace(key, std::make_pair(-1.0, -1.0));
            if (TokenId(i) == u)
                it->second.first = w;
            else
                it->second.second = w;
        }
    }

    TokenEmbeddingGraph g;
    g.node_count = matrix.rows;
    g.edges.reserve(pairs.size());
    for (const auto& [key, dir] : pairs) {
        Edge e;
        e.u = TokenId(key >> 32);
        e.v = TokenId(key & 0xFFFFFFFFu);
        if (dir.first >= 0.0 && dir.second >= 0.0)
            e.weight = t_conorm(dir.first, dir.second);
        else
            e.weight = std::max(dir.first, dir.second);
        g.edges.push_back(e);
    }
    std::sort(g.edges.begin(), g.edges.end(), [](const Edge& a, const Edge& b) {
        return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    g.build_adjacency();
    return g;
}

void dump_edges_jsonl(const TokenEmbeddingGraph& graph, std::ostream& out) {
    for (const Edge& e : graph.edges) {
        nlohmann::ordered_json j;
        j["u"] = e.u;
        j["v"] = e.v;
        j["w"] = e.weight;
        out << j.dump() << "\n";
    }
}

}  // namespace glitchhunter::teg
