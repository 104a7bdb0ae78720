#include "glitchhunter/hunter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "glitchhunter/error.hpp"
#include "glitchhunter/teg.hpp"
#include "glitchhunter/util.hpp"

namespace glitchhunter::hunter {

namespace {

using Clock = std::chrono::steady_clock;

void validate(const HunterConfig& cfg) {
    if (cfg.k == 0) throw Error(Errc::SpecInvalid, "k must be positive");
    if (!(cfg.resolution > 0.0)) throw Error(Errc::SpecInvalid, "resolution must be positive");
    if (!(cfg.sample_fraction > 0.0) || cfg.sample_fraction > 1.0)
        throw Error(Errc::SpecInvalid, "sample_fraction must be in (0, 1]");
    if (cfg.min_sample == 0) throw Error(Errc::SpecInvalid, "min_sample must be positive");
    if (cfg.threshold_r < 0.0 || cfg.threshold_r > 1.0)
        throw Error(Errc::SpecInvalid, "threshold_r must be in [0, 1]");
    if (cfg.max_iterations == 0) throw Error(Errc::SpecInvalid, "max_iterations must be positive");
}

// Verdict-cache aware batch test: only ids missing from the cache reach the
// oracle, so no token is ever tested twice.
void test_into_cache(const std::vector<TokenId>& ids, const ModelBundle& bundle,
                     const oracle::OracleConfig& ocfg, oracle::OracleClient& client,
                     oracle::BudgetLedger& ledger,
                     std::unordered_map<TokenId, oracle::GlitchVerdict>& cache) {
    std::vector<TokenId> fresh;
    fresh.reserve(ids.size());
    for (TokenId id : ids)
        if (!cache.count(id)) fresh.push_back(id);
    std::sort(fresh.begin(), fresh.end());
    fresh.erase(std::unique(fresh.begin(), fresh.end()), fresh.end());
    if (fresh.empty()) return;
    std::vector<oracle::GlitchVerdict> verdicts =
        oracle::test_tokens(fresh, bundle.vocab, ocfg, client, ledger);
    for (std::size_t i = 0; i < fresh.size(); ++i) cache.emplace(fresh[i], verdicts[i]);
}

void finish_report(HuntReport& report, const ModelBundle& bundle, oracle::OracleClient& client,
                   const oracle::OracleConfig& ocfg, std::vector<TokenId> final_set,
                   std::unordered_map<TokenId, oracle::GlitchVerdict>& cache,
                   Clock::time_point start, bool verify) {
    std::sort(final_set.begin(), final_set.end());
    if (verify) {
        test_into_cache(final_set, bundle, ocfg, client, report.ledger, cache);
        for (TokenId id : final_set) {
            const oracle::GlitchVerdict& v = cache.at(id);
            if (!v.is_glitch) continue;
            report.glitch_tokens.push_back({id, bundle.vocab.at(id), v.score, v.symptom});
        }
    } else {
        for (TokenId id : final_set) {
            auto it = cache.find(id);
            if (it == cache.end()) {
                report.glitch_tokens.push_back({id, bundle.vocab.at(id), std::nullopt, std::nullopt});
            } else {
                report.glitch_tokens.push_back(
                    {id, bundle.vocab.at(id), it->second.score, it->second.symptom});
            }
        }
    }
    report.ledger.wall_ms +=
        std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start).count();
}

}  // namespace

HuntReport hunt(const ModelBundle& bundle, oracle::OracleClient& client,
                const oracle::OracleConfig& oracle_config, const HunterConfig& config) {
    validate(config);
    const std::size_t n = bundle.vocab.size();
    if (n < 2) throw Error(Errc::DegenerateInput, "hunt needs at least 2 tokens");
    if (bundle.embeddings.rows != n)
        throw Error(Errc::VocabLengthMismatch, "vocabulary and embedding row count differ");

    auto start = Clock::now();
    HuntReport report;
    report.config = config;
    report.oracle_config = oracle_config;
    report.termination = "max_iterations";

    std::unordered_map<TokenId, oracle::GlitchVerdict> cache;
    std::vector<TokenId> active(n);
    std::iota(active.begin(), active.end(), 0u);

    // CPM's gamma is an absolute density threshold, so the configured
    // resolution is divided by the vocabulary size: the cluster count then
    // tracks the resolution value rather than the vocabulary size, and the
    // yardstick stays fixed while the active set shrinks. The modularity
    // variant normalizes by total edge weight internally and takes the
    // resolution as-is.
    const double gamma = config.objective == leiden::Objective::Cpm
                             ? config.resolution / double(n)
                             : config.resolution;

    for (std::uint32_t iter = 0; iter < config.max_iterations; ++iter) {
        if (active.size() <= 2) {
            report.termination = "small_active";
            break;
        }
        auto k_eff = std::uint32_t(std::min<std::size_t>(config.k, active.size() - 1));
        EmbeddingMatrix sub = embedstore::gather_rows(bundle.embeddings, active);
        teg::TokenEmbeddingGraph graph = teg::build_teg(sub, k_eff);

        leiden::LeidenParams lp;
        lp.resolution = gamma;
        lp.objective = config.objective;
        lp.seed = util::splitmix64(config.seed ^ (0x8000000000000000ull | iter));
        leiden::LeidenResult part = leiden::run(graph, lp);
        std::vector<std::vector<TokenId>> communities = leiden::communities_of(part.partition);

        util::Rng sampler(util::splitmix64(config.seed ^ iter));
        IterationTrace trace;
        trace.active_count = active.size();
        std::vector<std::vector<TokenId>> sampled_per_comm(communities.size());
        std::vector<TokenId> batch;
        for (std::size_t ci = 0; ci < communities.size(); ++ci) {
            const auto& members = communities[ci];  // local indices into `active`
            auto want = std::size_t(
                std::ceil(config.sample_fraction * double(members.size())));
            want = std::max<std::size_t>(want, config.min_sample);
            want = std::min(want, members.size());
            std::vector<TokenId> picks = sampler.sample_without_replacement(members.size(), want);
            for (TokenId pick : picks) {  // pick indexes into `members`
                TokenId global = active[members[pick]];
                sampled_per_comm[ci].push_back(global);
                batch.push_back(global);
            }
        }
        test_into_cache(batch, bundle, oracle_config, client, report.ledger, cache);

        std::vector<TokenId> next;
        for (std::size_t ci = 0; ci < communities.size(); ++ci) {
            std::size_t x = 0;
            for (TokenId global : sampled_per_comm[ci])
                if (cache.at(global).is_glitch) ++x;
            double sample_size = double(sampled_per_comm[ci].size());
            bool keep = config.threshold_r == 0.0
                            ? x >= 1
                            : double(x) / sample_size >= config.threshold_r;
            trace.kept.push_back(keep);
            std::vector<TokenId> globals;
            globals.reserve(communities[ci].size());
            for (TokenId local : communities[ci]) globals.push_back(active[local]);
            if (keep) next.insert(next.end(), globals.begin(), globals.end());
            trace.communities.push_back(std::move(globals));
            trace.sampled.push_back(sampled_per_comm[ci]);
        }
        report.trace.push_back(std::move(trace));
        report.iterations = iter + 1;

        std::sort(next.begin(), next.end());
        if (next.empty()) {
            report.termination = "empty";
            active = std::move(next);
            break;
        }
        if (next.size() == active.size()) {
            report.termination = "fixpoint";
            active = std::move(next);
            break;
        }
        active = std::move(next);
    }

    finish_report(report, bundle, client, oracle_config, std::move(active), cache, start,
                  config.verify_final);
    return report;
}

HuntReport traverse(const ModelBundle& bundle, oracle::OracleClient& client,
                    const oracle::OracleConfig& oracle_config, const HunterConfig& config) {
    auto start = Clock::now();
    HuntReport report;
    report.config = config;
    report.oracle_config = oracle_config;
    report.termination = "exhaustive";
    report.iterations = 0;

    std::vector<TokenId> all(bundle.vocab.size());
    std::iota(all.begin(), all.end(), 0u);
    std::unordered_map<TokenId, oracle::GlitchVerdict> cache;
    finish_report(report, bundle, client, oracle_config, std::move(all), cache, start, true);
    return report;
}

const char* objective_name(leiden::Objective o) {
    return o == leiden::Objective::Cpm ? "cpm" : "rb_modularity";
}

std::optional<leiden::Objective> objective_from_name(std::string_view name) {
    if (name == "cpm") return leiden::Objective::Cpm;
    if (name == "rb_modularity") return leiden::Objective::RbModularity;
    return std::nullopt;
}

nlohmann::ordered_json report_to_json(const HuntReport& report) {
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    nlohmann::ordered_json cfg;
    cfg["k"] = report.config.k;
    cfg["resolution"] = report.config.resolution;
    cfg["objective"] = objective_name(report.config.objective);
    cfg["sample_fraction"] = report.config.sample_fraction;
    cfg["min_sample"] = report.config.min_sample;
    cfg["threshold_r"] = report.config.threshold_r;
    cfg["max_iterations"] = report.config.max_iterations;
    cfg["verify_final"] = report.config.verify_final;
    cfg["seed"] = report.config.seed;
    nlohmann::ordered_json ocfg;
    ocfg["mode"] = report.oracle_config.endpoint_url.empty() ? "mock" : "http";
    ocfg["endpoint_url"] = report.oracle_config.endpoint_url;
    ocfg["model_name"] = report.oracle_config.model_name;
    ocfg["temperature"] = report.oracle_config.temperature;
    ocfg["max_tokens"] = report.oracle_config.max_tokens;
    ocfg["repeats"] = report.oracle_config.repeats;
    ocfg["glitch_threshold"] = report.oracle_config.glitch_threshold;
    ocfg["chat_mode"] = report.oracle_config.chat_mode;
    cfg["oracle"] = std::move(ocfg);
    j["config"] = std::move(cfg);
    j["termination"] = report.termination;
    j["iterations"] = report.iterations;
    nlohmann::ordered_json ledger;
    ledger["queries"] = report.ledger.queries;
    ledger["prompt_tokens"] = report.ledger.prompt_tokens;
    ledger["completion_tokens"] = report.ledger.completion_tokens;
    ledger["wall_ms"] = report.ledger.wall_ms;
    j["ledger"] = std::move(ledger);
    nlohmann::ordered_json tokens = nlohmann::ordered_json::array();
    for (const HuntReport::Entry& e : report.glitch_tokens) {
        nlohmann::ordered_json t;
        t["id"] = e.id;
        t["string"] = e.string;
        if (e.score)
            t["score"] = *e.score;
        else
            t["score"] = nullptr;
        if (e.symptom)
            t["symptom"] = taxonomy::symptom_name(*e.symptom);
        else
            t["symptom"] = nullptr;
        tokens.push_back(std::move(t));
    }
    j["glitch_tokens"] = std::move(tokens);
    return j;
}

void write_report(const HuntReport& report, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::IoFailure, path.string());
    out << report_to_json(report).dump(2) << "\n";
    if (!out) throw Error(Errc::IoFailure, path.string());
}

std::vector<TokenId> load_report_glitch_ids(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::MissingFile, path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::IoFailure, path.string() + ": " + e.what());
    }
    std::vector<TokenId> ids;
    const nlohmann::json* arr = nullptr;
    if (j.is_array())
        arr = &j;
    else if (j.contains("glitch_tokens") && j["glitch_tokens"].is_array())
        arr = &j["glitch_tokens"];
    else
        throw Error(Errc::IoFailure, path.string() + ": no glitch token list found");
    for (const auto& v : *arr) {
        if (v.is_number_integer())
            ids.push_back(TokenId(v.get<std::int64_t>()));
        else if (v.is_object() && v.contains("id") && v["id"].is_number_integer())
            ids.push_back(TokenId(v["id"].get<std::int64_t>()));
        else
            throw Error(Errc::IoFailure, path.string() + ": malformed glitch token entry");
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace glitchhunter::hunter
