#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace glitchhunter::util {

// Seed mixing for deriving independent sub-streams from one user seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// All randomized components draw through this wrapper. std::shuffle and the
// std distributions are implementation-defined, so the draw algorithms live
// here where they are pinned.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, bound). Modulo bias is ~2^-64 * bound; irrelevant here.
    std::uint64_t below(std::uint64_t bound) { return engine_() % bound; }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return double(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; the spare is cached.
    double gaussian();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = std::size_t(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct values from 0..n-1, returned sorted ascending.
    std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t k);

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// ---- UTF-8 ----
// Token strings are treated as sequences of Unicode scalar values. Invalid
// bytes decode as one scalar each (the byte value), so decoding is total.
std::vector<char32_t> utf8_decode(std::string_view s);
std::string utf8_encode(const std::vector<char32_t>& scalars);
std::string utf8_encode_one(char32_t c);
std::size_t utf8_length(std::string_view s);

// ---- string helpers ----
std::string trim(std::string_view s);
std::string to_lower(std::string_view s);
bool icontains(std::string_view haystack, std::string_view needle);
std::size_t whitespace_token_count(std::string_view s);

// Edit distance over Unicode scalar values.
std::size_t levenshtein(std::string_view a, std::string_view b);

// ---- parallelism ----
// 0 means "leave the OpenMP default alone".
void set_parallel_workers(int workers);

}  // namespace glitchhunter::util
