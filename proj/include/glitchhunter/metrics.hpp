#pragma once

#include <cstdint>
#include <span>

#include "glitchhunter/embedstore.hpp"

namespace glitchhunter::metrics {

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
};

struct EvalSummary {
    ConfusionCounts counts;
    double precision = 0.0;
    double recall = 0.0;
    // True when a 0/0 was defined away as 0.
    bool zero_division = false;
};

// Real-valued so averaged counts can be fed through the same formulas.
double precision_of(double tp, double fp);
double recall_of(double tp, double fn);

// Duplicates in either side collapse; only set membership counts.
EvalSummary score(std::span<const TokenId> reported, std::span<const TokenId> truth);

}  // namespace glitchhunter::metrics
