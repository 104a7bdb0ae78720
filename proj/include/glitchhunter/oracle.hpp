#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "glitchhunter/embedstore.hpp"
#include "glitchhunter/oracle_prompts.hpp"
#include "glitchhunter/taxonomy.hpp"

namespace glitchhunter::oracle {

struct OracleConfig {
    std::string endpoint_url;  // empty selects the mock client
    std::string model_name = "mock";
    double temperature = 0.0;
    int max_tokens = 64;
    int repeats = 1;  // per-task queries; the verdict is the majority vote
    double request_timeout_s = 30.0;
    int concurrency_limit = 4;
    int glitch_threshold = -2;  // is_glitch iff score >= threshold
    bool chat_mode = false;     // read choices[0].message.content instead of .text
    int max_retries = 3;
};

// Spend accounting. Token counts are whitespace-split approximations; retry
// attempts are tallied separately from completed queries.
struct BudgetLedger {
    std::int64_t queries = 0;
    std::int64_t prompt_tokens = 0;
    std::int64_t completion_tokens = 0;
    std::int64_t wall_ms = 0;
    std::int64_t retries = 0;
};

struct TaskOutcome {
    int per = 0;  // majority vote over repeats
    std::string failing_response;
};

struct GlitchVerdict {
    TokenId token = 0;
    std::array<TaskOutcome, 3> outcomes;  // kTasks order
    int score = -3;                       // minus the number of passed tasks
    bool is_glitch = false;
    std::optional<taxonomy::Symptom> symptom;  // from the first failed task
};

class OracleClient {
public:
    virtual ~OracleClient() = default;
    // Returns the completion text. Throws Error with an oracle code on any
    // transport or protocol failure; implementations must be safe to call
    // from multiple threads.
    virtual std::string complete(const std::string& prompt) = 0;
    virtual const char* mode_name() const = 0;
};

// Middle scalar value replaced by '*'; when that leaves the string unchanged
// the replacement falls back to '#', so the corruption never echoes the
// original token.
std::string mock_corrupt(std::string_view token);

// Deterministic stand-in for a live model: planted tokens answer from the
// corrupted string (and therefore fail repetition and spelling), everything
// else answers perfectly.
class MockOracleClient : public OracleClient {
public:
    MockOracleClient(const Vocabulary& vocab, std::span<const TokenId> planted_ids);

    std::string complete(const std::string& prompt) override;
    const char* mode_name() const override { return "mock"; }

private:
    std::unordered_set<std::string> planted_;
};

// OpenAI-compatible completions endpoint. Body is always
// {"model","prompt","temperature","max_tokens"}; GLITCH_ORACLE_KEY, when set,
// rides along as a bearer token.
class HttpOracleClient : public OracleClient {
public:
    explicit HttpOracleClient(const OracleConfig& config);

    std::string complete(const std::string& prompt) override;
    const char* mode_name() const override { return "http"; }

private:
    OracleConfig config_;
    std::string base_;  // scheme://host:port
    std::string path_;
};

std::unique_ptr<OracleClient> make_client(const OracleConfig& config, const Vocabulary& vocab,
                                          std::span<const TokenId> planted_ids);

// Runs all three proxy tasks (with retries and majority voting) for one
// token. Every completed query lands in the ledger.
GlitchVerdict glitch_test(TokenId token, const Vocabulary& vocab, const OracleConfig& config,
                          OracleClient& client, BudgetLedger& ledger);

// Tests many tokens with up to concurrency_limit in flight. Results come
// back in the order of `ids`, independent of scheduling.
std::vector<GlitchVerdict> test_tokens(std::span<const TokenId> ids, const Vocabulary& vocab,
                                       const OracleConfig& config, OracleClient& client,
                                       BudgetLedger& ledger);

}  // namespace glitchhunter::oracle
