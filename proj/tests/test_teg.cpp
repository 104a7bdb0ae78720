#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <utility>
#include <vector>

#include <json.hpp>

#include "glitchhunter/error.hpp"
#include "glitchhunter/teg.hpp"
#include "glitchhunter/util.hpp"
#include "helpers.hpp"

using namespace glitchhunter;
using testutil::thrown_errc;

namespace {

EmbeddingMatrix gaussian_matrix(std::size_t n, std::size_t m, std::uint64_t seed) {
    EmbeddingMatrix mat;
    mat.rows = n;
    mat.cols = m;
    mat.data.resize(n * m);
    util::Rng rng(seed);
    for (auto& v : mat.data) v = float(rng.gaussian());
    return mat;
}

EmbeddingMatrix line_matrix(std::vector<float> xs) {
    EmbeddingMatrix mat;
    mat.rows = xs.size();
    mat.cols = 1;
    mat.data = std::move(xs);
    return mat;
}

// Quadratic-time neighbor list under the same (squared distance, id) order.
std::vector<TokenId> brute_neighbors(const EmbeddingMatrix& mat, std::size_t i, std::uint32_t k) {
    std::vector<std::pair<double, TokenId>> all;
    for (std::size_t j = 0; j < mat.rows; ++j) {
        if (j == i) continue;
        double acc = 0.0;
        for (std::size_t c = 0; c < mat.cols; ++c) {
            double d = double(mat.row(i)[c]) - double(mat.row(j)[c]);
            acc += d * d;
        }
        all.emplace_back(acc, TokenId(j));
    }
    std::sort(all.begin(), all.end());
    std::vector<TokenId> ids;
    for (std::uint32_t r = 0; r < k; ++r) ids.push_back(all[r].second);
    return ids;
}

double smooth_sum(std::span<const double> dists, double rho, double sigma) {
    double acc = 0.0;
    for (double d : dists) acc += std::exp(-std::max(0.0, d - rho) / sigma);
    return acc;
}

}  // namespace

TEST_SUITE("teg") {

TEST_CASE("knn on a line picks the closer point") {
    auto mat = line_matrix({0.0f, 1.0f, 3.0f});
    auto nn = teg::knn(mat, 1);
    REQUIRE(nn.n == 3);
    REQUIRE(nn.k == 1);
    CHECK(nn.ids_of(0)[0] == 1);
    CHECK(nn.dists_of(0)[0] == doctest::Approx(1.0));
    CHECK(nn.ids_of(1)[0] == 0);
    CHECK(nn.ids_of(2)[0] == 1);
    CHECK(nn.dists_of(2)[0] == doctest::Approx(2.0));
}

TEST_CASE("knn matches brute force on random matrices") {
    util::Rng meta(77);
    for (int trial = 0; trial < 20; ++trial) {
        std::size_t n = 5 + meta.below(100);
        std::size_t m = 1 + meta.below(8);
        std::uint32_t k = 1 + std::uint32_t(meta.below(std::min<std::size_t>(8, n - 1)));
        auto mat = gaussian_matrix(n, m, 1000 + trial);
        auto nn = teg::knn(mat, k);
        REQUIRE(nn.k == k);
        for (std::size_t i = 0; i < n; ++i) {
            auto expect = brute_neighbors(mat, i, k);
            auto got = nn.ids_of(i);
            for (std::uint32_t r = 0; r < k; ++r) CHECK(got[r] == expect[r]);
        }
    }
}

TEST_CASE("duplicate rows rank as zero-distance neighbors with id tie-break") {
    EmbeddingMatrix mat;
    mat.rows = 3;
    mat.cols = 2;
    mat.data = {5, 5, 5, 5, 9, 9};
    auto nn = teg::knn(mat, 2);
    CHECK(nn.ids_of(0)[0] == 1);
    CHECK(nn.dists_of(0)[0] == 0.0);
    CHECK(nn.ids_of(1)[0] == 0);
    CHECK(nn.dists_of(1)[0] == 0.0);
    // node 2 sees both duplicates at the same distance; smaller id first
    CHECK(nn.ids_of(2)[0] == 0);
    CHECK(nn.ids_of(2)[1] == 1);
}

TEST_CASE("k clamps to n-1 when the matrix is small") {
    auto mat = gaussian_matrix(4, 3, 5);
    auto nn = teg::knn(mat, 100);
    CHECK(nn.k == 3);
    for (std::size_t i = 0; i < 4; ++i) {
        std::vector<TokenId> seen(nn.ids_of(i).begin(), nn.ids_of(i).end());
        std::sort(seen.begin(), seen.end());
        std::vector<TokenId> others;
        for (TokenId j = 0; j < 4; ++j)
            if (j != i) others.push_back(j);
        CHECK(seen == others);
    }
}

TEST_CASE("knn validates its inputs") {
    EmbeddingMatrix empty;
    CHECK(thrown_errc([&] { teg::knn(empty, 3); }) == Errc::EmptyMatrix);
    auto single = line_matrix({1.0f});
    CHECK(thrown_errc([&] { teg::knn(single, 1); }) == Errc::DegenerateInput);
    auto two = line_matrix({0.0f, 1.0f});
    CHECK(thrown_errc([&] { teg::knn(two, 0); }) == Errc::DegenerateInput);
}

TEST_CASE("smoothing solves the calibrated profiles") {
    // roots recomputed with an independent high-precision bisection
    const double kSigmaA = 1.7780965750173667;
    const double kSigmaB = 1.1331928143895706;

    std::vector<double> a{1.0, 2.0, 3.0, 5.0};
    auto pa = teg::smooth_params(a, 4);
    CHECK(pa.rho == 1.0);
    CHECK(pa.solvable);
    CHECK(std::abs(pa.sigma - kSigmaA) < 1e-4);
    CHECK(pa.residual <= teg::kBisectTolerance);
    CHECK(std::abs(smooth_sum(a, pa.rho, pa.sigma) - 2.0) <= teg::kBisectTolerance);

    std::vector<double> b{0.5, 1.5, 2.5};
    auto pb = teg::smooth_params(b, 3);
    CHECK(pb.rho == 0.5);
    CHECK(pb.solvable);
    CHECK(std::abs(pb.sigma - kSigmaB) < 1e-4);
    CHECK(std::abs(smooth_sum(b, pb.rho, pb.sigma) - std::log2(3.0)) <= teg::kBisectTolerance);
}

TEST_CASE("degenerate profiles clamp to the violated bound") {
    SUBCASE("coincident neighborhood pins the lower bound") {
        std::vector<double> d{2.0, 2.0, 2.0};
        auto p = teg::smooth_params(d, 3);
        CHECK(p.sigma == teg::kSigmaLo);
        CHECK_FALSE(p.solvable);
        CHECK(p.residual == doctest::Approx(3.0 - std::log2(3.0)).epsilon(1e-12));
    }
    SUBCASE("single neighbor has target zero") {
        std::vector<double> d{0.7};
        auto p = teg::smooth_params(d, 1);
        CHECK(p.sigma == teg::kSigmaLo);
        CHECK_FALSE(p.solvable);
        CHECK(p.residual == doctest::Approx(1.0));
    }
    SUBCASE("unreachable far wall pins the upper bound") {
        std::vector<double> d{0.0, 1e9, 1e9, 1e9};
        auto p = teg::smooth_params(d, 4);
        CHECK(p.sigma == teg::kSigmaHi);
        CHECK_FALSE(p.solvable);
        CHECK(p.residual == doctest::Approx(1.0).epsilon(1e-9));
    }
    SUBCASE("no neighbors is an error") {
        std::vector<double> d;
        CHECK(thrown_errc([&] { teg::smooth_params(d, 0); }) == Errc::EmptyNeighbors);
    }
}

TEST_CASE("positive_rho skips coincident neighbors") {
    std::vector<double> d{0.0, 0.0, 1.0, 2.0};
    CHECK(teg::smooth_params(d, 4, false).rho == 0.0);
    CHECK(teg::smooth_params(d, 4, true).rho == 1.0);
    std::vector<double> zeros{0.0, 0.0};
    CHECK(teg::smooth_params(zeros, 2, true).rho == 0.0);
}

TEST_CASE("random solvable profiles satisfy the smoothing equation") {
    util::Rng rng(404);
    for (int trial = 0; trial < 200; ++trial) {
        std::uint32_t k = 3 + std::uint32_t(rng.below(10));
        std::vector<double> d(k);
        double x = rng.uniform(0.05, 2.0);
        for (auto& v : d) {
            v = x;
            x += rng.uniform(0.01, 1.5);
        }
        auto p = teg::smooth_params(d, k);
        REQUIRE(p.solvable);
        CHECK(std::abs(smooth_sum(d, p.rho, p.sigma) - std::log2(double(k))) <= 1e-3);
    }
}

TEST_CASE("t_conorm algebra") {
    CHECK(teg::t_conorm(0.5, 0.5) == doctest::Approx(0.75));
    CHECK(teg::t_conorm(0.3, 0.0) == doctest::Approx(0.3));
    CHECK(teg::t_conorm(0.0, 0.8) == doctest::Approx(0.8));
    CHECK(teg::t_conorm(1.0, 0.4) == 1.0);
    util::Rng rng(6);
    for (int i = 0; i < 100; ++i) {
        double a = rng.uniform(), b = rng.uniform();
        double w = teg::t_conorm(a, b);
        CHECK(w == teg::t_conorm(b, a));
        CHECK(w >= std::max(a, b));
        CHECK(w <= 1.0);
    }
}

TEST_CASE("evenly spaced line builds the expected graph") {
    // k=2 on integer points 0..9: interior nodes see both neighbors at
    // distance 1, so consecutive pairs get mutual weight 1. The endpoints
    // also reach two steps in, one-directionally, with a vanishing weight.
    std::vector<float> xs(10);
    for (int i = 0; i < 10; ++i) xs[i] = float(i);
    auto g = teg::build_teg(line_matrix(std::move(xs)), 2);

    REQUIRE(g.node_count == 10);
    REQUIRE(g.edges.size() == 11);
    std::map<std::pair<TokenId, TokenId>, double> seen;
    for (const auto& e : g.edges) seen[{e.u, e.v}] = e.weight;
    for (TokenId i = 0; i + 1 < 10; ++i) {
        REQUIRE(seen.count({i, TokenId(i + 1)}));
        CHECK(seen[{i, TokenId(i + 1)}] == 1.0);
    }
    REQUIRE(seen.count({0, 2}));
    REQUIRE(seen.count({7, 9}));
    CHECK(seen[{0, 2}] > 0.0);
    CHECK(seen[{0, 2}] < 1e-6);
    CHECK(seen[{7, 9}] == seen[{0, 2}]);
}

TEST_CASE("build_teg assembles the directed weights it is given") {
    // Reconstructs the graph from the public knn/smooth_params pieces and
    // expects bit-identical edges.
    auto mat = gaussian_matrix(60, 4, 909);
    const std::uint32_t k = 4;
    auto g = teg::build_teg(mat, k);

    auto nn = teg::knn(mat, k);
    auto sp = teg::smooth_all(nn);
    std::map<std::pair<TokenId, TokenId>, std::pair<double, double>> dir;
    for (std::size_t i = 0; i < nn.n; ++i) {
        for (std::uint32_t r = 0; r < nn.k; ++r) {
            TokenId j = nn.ids_of(i)[r];
            double w = std::exp(-std::max(0.0, nn.dists_of(i)[r] - sp[i].rho) / sp[i].sigma);
            w = std::min(1.0, std::max(w, std::numeric_limits<double>::min()));
            TokenId u = std::min<TokenId>(TokenId(i), j), v = std::max<TokenId>(TokenId(i), j);
            auto [it, fresh] = dir.try_emplace({u, v}, std::make_pair(-1.0, -1.0));
            (TokenId(i) == u ? it->second.first : it->second.second) = w;
        }
    }
    REQUIRE(g.edges.size() == dir.size());
    std::size_t idx = 0;
    for (const auto& [uv, w] : dir) {
        const auto& e = g.edges[idx++];
        REQUIRE(e.u == uv.first);
        REQUIRE(e.v == uv.second);
        double expect = (w.first >= 0.0 && w.second >= 0.0) ? teg::t_conorm(w.first, w.second)
                                                            : std::max(w.first, w.second);
        CHECK(e.weight == expect);
    }
}

TEST_CASE("every node keeps a unit edge to its nearest neighbor") {
    auto mat = gaussian_matrix(40, 4, 31337);
    auto g = teg::build_teg(mat, 5);
    for (std::size_t i = 0; i < g.node_count; ++i) {
        double best = 0.0;
        for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e)
            best = std::max(best, g.nbr_weight[e]);
        CHECK(best == 1.0);
    }
}

TEST_CASE("edge weights stay inside the unit interval") {
    auto g = teg::build_teg(gaussian_matrix(80, 6, 2), 6);
    for (const auto& e : g.edges) {
        CHECK(e.weight > 0.0);
        CHECK(e.weight <= 1.0);
        CHECK(e.u < e.v);
    }
    for (std::size_t i = 1; i < g.edges.size(); ++i) {
        bool ordered = g.edges[i - 1].u < g.edges[i].u ||
                       (g.edges[i - 1].u == g.edges[i].u && g.edges[i - 1].v < g.edges[i].v);
        CHECK(ordered);
    }
}

TEST_CASE("adjacency mirrors the edge list") {
    auto g = teg::build_teg(gaussian_matrix(50, 3, 8), 4);
    REQUIRE(g.offsets.size() == g.node_count + 1);
    CHECK(g.offsets.back() == g.edges.size() * 2);
    double sum = 0.0;
    std::map<std::pair<TokenId, TokenId>, double> from_edges;
    for (const auto& e : g.edges) {
        sum += e.weight;
        from_edges[{e.u, e.v}] = e.weight;
        from_edges[{e.v, e.u}] = e.weight;
    }
    CHECK(g.total_weight == doctest::Approx(sum).epsilon(1e-12));
    std::size_t listed = 0;
    for (std::size_t i = 0; i < g.node_count; ++i) {
        for (std::size_t e = g.offsets[i]; e < g.offsets[i + 1]; ++e, ++listed) {
            auto it = from_edges.find({TokenId(i), g.nbr[e]});
            REQUIRE(it != from_edges.end());
            CHECK(g.nbr_weight[e] == it->second);
        }
    }
    CHECK(listed == g.edges.size() * 2);
}

TEST_CASE("parallel kernels agree with the serial reference") {
    auto mat = gaussian_matrix(300, 8, 555);
    auto nn_p = teg::knn(mat, 10);
    auto nn_s = teg::reference::knn(mat, 10);
    CHECK(nn_p.ids == nn_s.ids);
    CHECK(nn_p.dists == nn_s.dists);

    auto sp_p = teg::smooth_all(nn_p);
    auto sp_s = teg::reference::smooth_all(nn_s);
    REQUIRE(sp_p.size() == sp_s.size());
    for (std::size_t i = 0; i < sp_p.size(); ++i) {
        CHECK(sp_p[i].rho == sp_s[i].rho);
        CHECK(sp_p[i].sigma == sp_s[i].sigma);
        CHECK(sp_p[i].residual == sp_s[i].residual);
        CHECK(sp_p[i].solvable == sp_s[i].solvable);
    }

    auto g1 = teg::build_teg(mat, 10);
    auto g2 = teg::build_teg(mat, 10);
    REQUIRE(g1.edges.size() == g2.edges.size());
    for (std::size_t i = 0; i < g1.edges.size(); ++i) {
        CHECK(g1.edges[i].u == g2.edges[i].u);
        CHECK(g1.edges[i].v == g2.edges[i].v);
        CHECK(g1.edges[i].weight == g2.edges[i].weight);
    }
}

TEST_CASE("build_teg rejects degenerate matrices") {
    auto single = line_matrix({0.5f});
    CHECK(thrown_errc([&] { teg::build_teg(single, 2); }) == Errc::EmptyMatrix);
}

TEST_CASE("edge dump emits one canonical json object per line") {
    auto g = teg::build_teg(gaussian_matrix(12, 2, 99), 3);
    std::ostringstream out;
    teg::dump_edges_jsonl(g, out);
    std::istringstream in(out.str());
    std::string line;
    std::size_t count = 0;
    while (std::getline(in, line)) {
        auto j = nlohmann::json::parse(line);
        REQUIRE(j.contains("u"));
        REQUIRE(j.contains("v"));
        REQUIRE(j.contains("w"));
        CHECK(j["u"].get<TokenId>() == g.edges[count].u);
        CHECK(j["v"].get<TokenId>() == g.edges[count].v);
        CHECK(j["w"].get<double>() == doctest::Approx(g.edges[count].weight));
        ++count;
    }
    CHECK(count == g.edges.size());
}

}  // TEST_SUITE
