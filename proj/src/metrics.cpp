#include "glitchhunter/metrics.hpp"

#include <unordered_set>

namespace glitchhunter::metrics {

double precision_of(double tp, double fp) {
    double denom = tp + fp;
    return denom == 0.0 ? 0.0 : tp / denom;
}

double recall_of(double tp, double fn) {
    double denom = tp + fn;
    return denom == 0.0 ? 0.0 : tp / denom;
}

EvalSummary score(std::span<const TokenId> reported, std::span<const TokenId> truth) {
    std::unordered_set<TokenId> rep(reported.begin(), reported.end());
    std::unordered_set<TokenId> tru(truth.begin(), truth.end());

    EvalSummary s;
    for (TokenId id : rep) {
        if (tru.count(id))
            ++s.counts.tp;
        else
            ++s.counts.fp;
    }
    for (TokenId id : tru)
        if (!rep.count(id)) ++s.counts.fn;

    s.zero_division = (s.counts.tp + s.counts.fp == 0) || (s.counts.tp + s.counts.fn == 0);
    s.precision = precision_of(double(s.counts.tp), double(s.counts.fp));
    s.recall = recall_of(double(s.counts.tp), double(s.counts.fn));
    return s;
}

}  // namespace glitchhunter::metrics
