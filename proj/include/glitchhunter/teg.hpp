#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "glitchhunter/embedstore.hpp"

namespace glitchhunter::teg {

// Exact K nearest neighbors under Euclidean distance. Rows are independent,
// so the parallel and serial versions must agree bit for bit.
struct KnnResult {
    std::size_t n = 0;
    std::uint32_t k = 0;
    std::vector<TokenId> ids;     // n*k, per row ascending by (distance, id)
    std::vector<double> dists;    // n*k

    std::span<const TokenId> ids_of(std::size_t i) const {
        return std::span<const TokenId>(ids.data() + i * k, k);
    }
    std::span<const double> dists_of(std::size_t i) const {
        return std::span<const double>(dists.data() + i * k, k);
    }
};

// Per-node local scale: rho is the nearest-neighbor distance, sigma solves
//   sum_j exp(-max(0, d_ij - rho_i) / sigma_i) = log2(k)
// by bisection. When no root exists in the bracket, sigma is clamped to the
// violated bound, solvable goes false, and residual reports |f(sigma)-log2 k|.
struct SmoothParams {
    double rho = 0.0;
    double sigma = 0.0;
    double residual = 0.0;
    bool solvable = false;
};

struct TegOptions {
    // When set, rho is the smallest strictly positive neighbor distance
    // (falling back to 0 if every neighbor coincides).
    bool positive_rho = false;
};

struct Edge {
    TokenId u = 0;  // u < v always
    TokenId v = 0;
    double weight = 0.0;
};

struct TokenEmbeddingGraph {
    std::size_t node_count = 0;
    std::vector<Edge> edges;  // sorted by (u, v)

    // CSR adjacency over both directions, filled by build_adjacency().
    std::vector<std::size_t> offsets;
    std::vector<TokenId> nbr;
    std::vector<double> nbr_weight;
    double total_weight = 0.0;

    void build_adjacency();
};

inline constexpr double kSigmaLo = 1e-8;
inline constexpr double kSigmaHi = 1e6;
inline constexpr int kBisectIterations = 64;
inline constexpr double kBisectTolerance = 1e-5;

KnnResult knn(const EmbeddingMatrix& matrix, std::uint32_t k);
SmoothParams smooth_params(std::span<const double> neighbor_dists, std::uint32_t k,
                           bool positive_rho = false);
std::vector<SmoothParams> smooth_all(const KnnResult& nn, const TegOptions& options = {});

// Probabilistic t-conorm used to symmetrize directional weights.
double t_conorm(double a, double b);

// K-NN graph with UMAP-style membership weights; an undirected edge exists
// when either endpoint lists the other among its k nearest.
TokenEmbeddingGraph build_teg(const EmbeddingMatrix& matrix, std::uint32_t k,
                              const TegOptions& options = {});

// One JSON object per line: {"u":., "v":., "w":.} with u < v.
void dump_edges_jsonl(const TokenEmbeddingGraph& graph, std::ostream& out);

// Single-threaded implementations kept as the comparison baseline for tests
// and the kernel benchmark.
namespace reference {
KnnResult knn(const EmbeddingMatrix& matrix, std::uint32_t k);
std::vector<SmoothParams> smooth_all(const KnnResult& nn, const TegOptions& options = {});
}  // namespace reference

}  // namespace glitchhunter::teg
