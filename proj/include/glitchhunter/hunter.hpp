#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "glitchhunter/embedstore.hpp"
#include "glitchhunter/leiden.hpp"
#include "glitchhunter/oracle.hpp"

namespace glitchhunter::hunter {

struct HunterConfig {
    std::uint32_t k = 50;
    // Under the CPM objective the hunter clusters with gamma = resolution / n
    // (vocabulary size, fixed across iterations), so the value sets the
    // cluster-count scale and a greater resolution still yields more clusters
    // at any vocabulary size. The modularity objective takes it unscaled.
    double resolution = 75.0;
    leiden::Objective objective = leiden::Objective::Cpm;
    double sample_fraction = 0.05;
    std::uint32_t min_sample = 1;
    double threshold_r = 0.0;
    std::uint32_t max_iterations = 100;
    bool verify_final = true;
    std::uint64_t seed = 0;
};

// Per-iteration record kept for analysis and property tests; never serialized.
struct IterationTrace {
    std::size_t active_count = 0;
    std::vector<std::vector<TokenId>> communities;  // global token ids
    std::vector<std::vector<TokenId>> sampled;      // per community, subset of its members
    std::vector<bool> kept;
};

struct HuntReport {
    HunterConfig config;
    oracle::OracleConfig oracle_config;
    std::string termination;  // "fixpoint" | "empty" | "max_iterations" | "small_active" | "exhaustive"
    std::uint32_t iterations = 0;
    oracle::BudgetLedger ledger;

    struct Entry {
        TokenId id = 0;
        std::string string;
        std::optional<int> score;  // absent when the final pass is disabled and the token went untested
        std::optional<taxonomy::Symptom> symptom;
    };
    std::vector<Entry> glitch_tokens;  // sorted by id

    std::vector<IterationTrace> trace;
};

// The shrink loop: build the token embedding graph over the active set, cluster
// it, oracle-sample each community, and keep only communities whose sample
// hit. Stops at a fixpoint, an empty keep set, or the iteration cap; active
// sets of at most two tokens go straight to verification. Verdicts are cached,
// so no token is oracle-tested twice.
HuntReport hunt(const ModelBundle& bundle, oracle::OracleClient& client,
                const oracle::OracleConfig& oracle_config, const HunterConfig& config);

// Oracle-tests every token in the vocabulary. The efficiency baseline; also
// the upper bound for hunt's ledger on any input.
HuntReport traverse(const ModelBundle& bundle, oracle::OracleClient& client,
                    const oracle::OracleConfig& oracle_config, const HunterConfig& config);

const char* objective_name(leiden::Objective o);
std::optional<leiden::Objective> objective_from_name(std::string_view name);

nlohmann::ordered_json report_to_json(const HuntReport& report);
void write_report(const HuntReport& report, const std::filesystem::path& path);

// Reads back just the reported ids from a serialized report ("glitch_tokens"
// array, or a bare id array as written by the baselines).
std::vector<TokenId> load_report_glitch_ids(const std::filesystem::path& path);

}  // namespace glitchhunter::hunter
