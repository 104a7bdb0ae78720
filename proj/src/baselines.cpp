#include "glitchhunter/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "glitchhunter/error.hpp"
#include "glitchhunter/util.hpp"

namespace glitchhunter::baselines {

std::vector<TokenId> random_sampling(std::size_t n, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0)
        throw Error(Errc::SpecInvalid, "sampling fraction must be in (0, 1]");
    auto count = std::size_t(std::floor(fraction * double(n)));
    util::Rng rng(seed);
    return rng.sample_without_replacement(n, count);
}

std::vector<TokenId> rule_based_sampling(const Vocabulary& vocab, double fraction,
                                         std::uint64_t seed,
                                         const taxonomy::WordList& words) {
    std::vector<TokenId> drawn = random_sampling(vocab.size(), fraction, seed);
    std::vector<TokenId> kept;
    kept.reserve(drawn.size());
    for (TokenId id : drawn) {
        std::string s = util::to_lower(util::trim(vocab.at(id)));
        if (!words.contains(s)) kept.push_back(id);
    }
    return kept;
}

namespace {

double squared_distance(const float* a, const double* b, std::size_t m) {
    double acc = 0.0;
    for (std::size_t d = 0; d < m; ++d) {
        double diff = double(a[d]) - b[d];
        acc += diff * diff;
    }
    return acc;
}

// D^2-weighted seeding: each next center is drawn with probability proportional
// to its squared distance from the nearest center chosen so far.
std::vector<std::vector<double>> seed_plusplus(const EmbeddingMatrix& matrix, std::uint32_t k,
                                               util::Rng& rng) {
    const std::size_t n = matrix.rows;
    const std::size_t m = matrix.cols;
    std::vector<std::vector<double>> centers;
    centers.reserve(k);

    std::size_t first = rng.below(n);
    auto row0 = matrix.row(first);
    centers.emplace_back(row0.begin(), row0.end());

    std::vector<double> best(n);
    for (std::size_t i = 0; i < n; ++i)
        best[i] = squared_distance(matrix.row(i).data(), centers[0].data(), m);

    while (centers.size() < k) {
        double total = 0.0;
        for (double d : best) total += d;
        std::size_t pick;
        if (total <= 0.0) {
            pick = rng.below(n);  // all points coincide with a center
        } else {
            double target = rng.uniform() * total;
            double run = 0.0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                run += best[i];
                if (run >= target) {
                    pick = i;
                    break;
                }
            }
        }
        auto row = matrix.row(pick);
        centers.emplace_back(row.begin(), row.end());
        const double* c = centers.back().data();
        for (std::size_t i = 0; i < n; ++i)
            best[i] = std::min(best[i], squared_distance(matrix.row(i).data(), c, m));
    }
    return centers;
}

std::vector<std::vector<double>> seed_random(const EmbeddingMatrix& matrix, std::uint32_t k,
                                             util::Rng& rng) {
    std::vector<TokenId> ids = rng.sample_without_replacement(matrix.rows, k);
    std::vector<std::vector<double>> centers;
    centers.reserve(k);
    for (TokenId id : ids) {
        auto row = matrix.row(id);
        centers.emplace_back(row.begin(), row.end());
    }
    return centers;
}

}  // namespace

KMeansResult kmeans_centroid_cluster(const EmbeddingMatrix& matrix, const KMeansOptions& options) {
    const std::size_t n = matrix.rows;
    const std::size_t m = matrix.cols;
    const std::uint32_t k = options.k;
    if (n == 0 || m == 0) throw Error(Errc::EmptyMatrix, "k-means needs a non-empty matrix");
    if (k == 0 || n < k)
        throw Error(Errc::DegenerateInput,
                    "k-means needs n >= k, got n=" + std::to_string(n) + " k=" + std::to_string(k));

    util::Rng rng(options.seed);
    std::vector<std::vector<double>> centers =
        options.plusplus_seeding ? seed_plusplus(matrix, k, rng) : seed_random(matrix, k, rng);

    KMeansResult result;
    result.assignment.assign(n, 0);
    std::vector<std::vector<double>> sums(k, std::vector<double>(m, 0.0));
    std::vector<std::size_t> counts(k, 0);

    std::vector<double> row_dist(n, 0.0);
    std::vector<std::uint32_t> next(n, 0);

    for (std::uint32_t iter = 0; iter < options.max_iters; ++iter) {
        // Assignment is row-independent; the wcss reduction happens serially
        // afterwards so results do not depend on the thread count.
#pragma omp parallel for schedule(static)
        for (long long ii = 0; ii < (long long)n; ++ii) {
            auto i = std::size_t(ii);
            const float* row = matrix.row(i).data();
            double best = std::numeric_limits<double>::infinity();
            std::uint32_t best_c = 0;
            for (std::uint32_t c = 0; c < k; ++c) {
                double d = squared_distance(row, centers[c].data(), m);
                if (d < best) {
                    best = d;
                    best_c = c;
                }
            }
            row_dist[i] = best;
            next[i] = best_c;
        }

        bool changed = false;
        double wcss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            wcss += row_dist[i];
            if (result.assignment[i] != next[i]) {
                result.assignment[i] = next[i];
                changed = true;
            }
        }
        result.wcss_trace.push_back(wcss);
        result.iterations = iter + 1;

        if (!changed && iter > 0) break;

        for (std::uint32_t c = 0; c < k; ++c) {
            std::fill(sums[c].begin(), sums[c].end(), 0.0);
            counts[c] = 0;
        }
        for (std::size_t i = 0; i < n; ++i) {
            std::uint32_t c = result.assignment[i];
            const float* row = matrix.row(i).data();
            for (std::size_t d = 0; d < m; ++d) sums[c][d] += double(row[d]);
            ++counts[c];
        }
        for (std::uint32_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its previous center
            for (std::size_t d = 0; d < m; ++d) centers[c][d] = sums[c][d] / double(counts[c]);
        }
    }

    std::vector<double> mean(m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const float* row = matrix.row(i).data();
        for (std::size_t d = 0; d < m; ++d) mean[d] += double(row[d]);
    }
    for (std::size_t d = 0; d < m; ++d) mean[d] /= double(n);

    double best = std::numeric_limits<double>::infinity();
    std::uint32_t best_c = 0;
    for (std::uint32_t c = 0; c < k; ++c) {
        double acc = 0.0;
        for (std::size_t d = 0; d < m; ++d) {
            double diff = centers[c][d] - mean[d];
            acc += diff * diff;
        }
        if (acc < best) {
            best = acc;
            best_c = c;
        }
    }
    result.chosen_cluster = best_c;
    for (std::size_t i = 0; i < n; ++i)
        if (result.assignment[i] == best_c) result.members.push_back(TokenId(i));
    return result;
}

}  // namespace glitchhunter::baselines
