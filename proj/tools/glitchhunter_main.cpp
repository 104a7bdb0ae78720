#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <unordered_set>

#include <CLI11.hpp>
#include <json.hpp>

#include "glitchhunter/baselines.hpp"
#include "glitchhunter/corpus.hpp"
#include "glitchhunter/error.hpp"
#include "glitchhunter/hunter.hpp"
#include "glitchhunter/metrics.hpp"
#include "glitchhunter/oracle.hpp"
#include "glitchhunter/simlab.hpp"
#include "glitchhunter/taxonomy.hpp"
#include "glitchhunter/teg.hpp"
#include "glitchhunter/util.hpp"

namespace gh = glitchhunter;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct HuntArgs {
    std::string embeddings;
    std::string mock_truth;
    std::string out;
    std::string config_path;
    std::string dump_graph;
    std::string dump_partition;
    int jobs = 0;
    gh::hunter::HunterConfig hunter;
    gh::oracle::OracleConfig oracle;
};

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw gh::Error(gh::Errc::ConfigError, "cannot open config file " + path);
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw gh::Error(gh::Errc::ConfigError, path + ": " + e.what());
    }
}

// Config-file values fill in everything the command line left untouched:
// flags > config file > built-in defaults.
void apply_config_file(const json& j, CLI::App* cmd, gh::hunter::HunterConfig& h,
                       gh::oracle::OracleConfig& o) {
    auto unset = [&](const char* flag) { return cmd->count(flag) == 0; };
    try {
        if (j.contains("k") && unset("--k")) h.k = j["k"].get<std::uint32_t>();
        if (j.contains("resolution") && unset("--resolution"))
            h.resolution = j["resolution"].get<double>();
        if (j.contains("objective") && unset("--objective")) {
            auto parsed = gh::hunter::objective_from_name(j["objective"].get<std::string>());
            if (!parsed)
                throw gh::Error(gh::Errc::ConfigError,
                                "unknown objective " + j["objective"].get<std::string>());
            h.objective = *parsed;
        }
        if (j.contains("sample_fraction") && unset("--sample-frac"))
            h.sample_fraction = j["sample_fraction"].get<double>();
        if (j.contains("min_sample") && unset("--min-sample"))
            h.min_sample = j["min_sample"].get<std::uint32_t>();
        if (j.contains("threshold_r") && unset("--threshold-r"))
            h.threshold_r = j["threshold_r"].get<double>();
        if (j.contains("max_iterations") && unset("--max-iterations"))
            h.max_iterations = j["max_iterations"].get<std::uint32_t>();
        if (j.contains("verify_final") && unset("--verify") && unset("--no-verify"))
            h.verify_final = j["verify_final"].get<bool>();
        if (j.contains("seed") && unset("--seed")) h.seed = j["seed"].get<std::uint64_t>();
        if (!j.contains("oracle")) return;
        const json& oj = j["oracle"];
        if (oj.contains("endpoint_url") && unset("--oracle-url"))
            o.endpoint_url = oj["endpoint_url"].get<std::string>();
        if (oj.contains("model_name") && unset("--model"))
            o.model_name = oj["model_name"].get<std::string>();
        if (oj.contains("temperature") && unset("--temperature"))
            o.temperature = oj["temperature"].get<double>();
        if (oj.contains("max_tokens") && unset("--max-tokens"))
            o.max_tokens = oj["max_tokens"].get<int>();
        if (oj.contains("repeats") && unset("--repeats")) o.repeats = oj["repeats"].get<int>();
        if (oj.contains("request_timeout_s") && unset("--timeout"))
            o.request_timeout_s = oj["request_timeout_s"].get<double>();
        if (oj.contains("concurrency_limit") && unset("--concurrency"))
            o.concurrency_limit = oj["concurrency_limit"].get<int>();
        if (oj.contains("glitch_threshold") && unset("--glitch-threshold"))
            o.glitch_threshold = oj["glitch_threshold"].get<int>();
        if (oj.contains("chat_mode") && unset("--chat"))
            o.chat_mode = oj["chat_mode"].get<bool>();
        if (oj.contains("max_retries") && unset("--max-retries"))
            o.max_retries = oj["max_retries"].get<int>();
    } catch (const json::exception& e) {
        throw gh::Error(gh::Errc::ConfigError, std::string("config file: ") + e.what());
    }
}

void add_hunter_flags(CLI::App* cmd, HuntArgs& a) {
    cmd->add_option("--k", a.hunter.k, "neighbors per token in the embedding graph");
    cmd->add_option("--resolution", a.hunter.resolution, "clustering resolution");
    cmd->add_option("--objective", a.hunter.objective, "clustering objective")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, gh::leiden::Objective>{
                {"cpm", gh::leiden::Objective::Cpm},
                {"rb_modularity", gh::leiden::Objective::RbModularity}},
            CLI::ignore_case));
    cmd->add_option("--sample-frac", a.hunter.sample_fraction,
                    "fraction of each community to oracle-test");
    cmd->add_option("--min-sample", a.hunter.min_sample, "minimum sample size per community");
    cmd->add_option("--threshold-r", a.hunter.threshold_r,
                    "glitch fraction a sample needs for its community to survive");
    cmd->add_option("--max-iterations", a.hunter.max_iterations, "shrink-loop iteration cap");
    cmd->add_flag("--verify,!--no-verify", a.hunter.verify_final,
                  "confirm every candidate token individually before reporting");
    cmd->add_option("--seed", a.hunter.seed, "random seed");
}

void add_oracle_flags(CLI::App* cmd, HuntArgs& a) {
    cmd->add_option("--oracle-url", a.oracle.endpoint_url,
                    "completions endpoint (OpenAI-compatible)");
    cmd->add_option("--mock", a.mock_truth, "truth.json for the built-in mock oracle");
    cmd->add_option("--model", a.oracle.model_name, "model name sent with each request");
    cmd->add_option("--temperature", a.oracle.temperature, "sampling temperature");
    cmd->add_option("--max-tokens", a.oracle.max_tokens, "completion token cap per request");
    cmd->add_option("--repeats", a.oracle.repeats, "queries per task; majority vote decides");
    cmd->add_option("--timeout", a.oracle.request_timeout_s, "request timeout in seconds");
    cmd->add_option("--concurrency", a.oracle.concurrency_limit, "max in-flight oracle requests");
    cmd->add_option("--glitch-threshold", a.oracle.glitch_threshold,
                    "score at or above which a token counts as glitch");
    cmd->add_flag("--chat", a.oracle.chat_mode, "read chat-style response fields");
    cmd->add_option("--max-retries", a.oracle.max_retries, "attempts per request before aborting");
    cmd->add_option("--config", a.config_path, "JSON config file (flags win over file values)");
    cmd->add_option("--jobs", a.jobs, "cap on worker threads");
}

void finalize_args(CLI::App* cmd, HuntArgs& a) {
    if (!a.config_path.empty())
        apply_config_file(load_json_file(a.config_path), cmd, a.hunter, a.oracle);
    if (a.jobs > 0) {
        gh::util::set_parallel_workers(a.jobs);
        a.oracle.concurrency_limit = std::min(a.oracle.concurrency_limit, a.jobs);
    }
    if (a.mock_truth.empty() == a.oracle.endpoint_url.empty())
        throw gh::Error(gh::Errc::ConfigError,
                        "exactly one of --mock or --oracle-url is required");
}

std::unique_ptr<gh::oracle::OracleClient> build_client(const HuntArgs& a,
                                                       const gh::ModelBundle& bundle,
                                                       std::vector<gh::TokenId>& planted) {
    if (!a.mock_truth.empty()) planted = gh::simlab::load_truth(a.mock_truth);
    return gh::oracle::make_client(a.oracle, bundle.vocab, planted);
}

void run_hunt(CLI::App* cmd, HuntArgs& a, bool exhaustive) {
    finalize_args(cmd, a);
    gh::ModelBundle bundle = gh::embedstore::load_model_bundle(a.embeddings);
    std::vector<gh::TokenId> planted;
    auto client = build_client(a, bundle, planted);

    if (!a.dump_graph.empty() || !a.dump_partition.empty()) {
        auto k_eff = std::uint32_t(
            std::min<std::size_t>(a.hunter.k, bundle.embeddings.rows - 1));
        gh::teg::TokenEmbeddingGraph graph = gh::teg::build_teg(bundle.embeddings, k_eff);
        if (!a.dump_graph.empty()) {
            std::ofstream out(a.dump_graph, std::ios::binary);
            if (!out) throw gh::Error(gh::Errc::IoFailure, a.dump_graph);
            gh::teg::dump_edges_jsonl(graph, out);
        }
        if (!a.dump_partition.empty()) {
            gh::leiden::LeidenParams lp;
            // Mirror the hunter's first-iteration scaling so the dump shows
            // the partition the hunt actually starts from.
            lp.resolution = a.hunter.objective == gh::leiden::Objective::Cpm
                                ? a.hunter.resolution / double(bundle.embeddings.rows)
                                : a.hunter.resolution;
            lp.objective = a.hunter.objective;
            lp.seed = a.hunter.seed;
            gh::leiden::LeidenResult res = gh::leiden::run(graph, lp);
            std::ofstream out(a.dump_partition, std::ios::binary);
            if (!out) throw gh::Error(gh::Errc::IoFailure, a.dump_partition);
            gh::leiden::dump_partition_json(res.partition, out);
            out << "\n";
        }
    }

    gh::hunter::HuntReport report =
        exhaustive ? gh::hunter::traverse(bundle, *client, a.oracle, a.hunter)
                   : gh::hunter::hunt(bundle, *client, a.oracle, a.hunter);
    gh::hunter::write_report(report, a.out);
    std::printf("%s: %zu glitch tokens, %lld queries, %u iterations (%s)\n",
                exhaustive ? "traverse" : "hunt", report.glitch_tokens.size(),
                (long long)report.ledger.queries, report.iterations,
                report.termination.c_str());
}

void write_json_file(const ordered_json& j, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw gh::Error(gh::Errc::IoFailure, path);
    out << j.dump(2) << "\n";
    if (!out) throw gh::Error(gh::Errc::IoFailure, path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"glitchhunter: glitch-token detection for LLM vocabularies"};
    app.require_subcommand(1);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic embedding bundle");
    gh::simlab::SimSpec spec;
    std::string sim_out;
    sim_cmd->add_option("--n", spec.n, "vocabulary size");
    sim_cmd->add_option("--m", spec.m, "embedding dimension");
    sim_cmd->add_option("--glitch", spec.glitch_count, "planted glitch token count");
    sim_cmd->add_option("--clusters", spec.cluster_count, "glitch cluster count");
    sim_cmd->add_option("--tightness", spec.cluster_tightness, "intra-cluster stddev");
    sim_cmd->add_option("--scatter", spec.scatter_fraction,
                        "fraction of glitch tokens placed like normals");
    sim_cmd->add_option("--seed", spec.seed, "random seed");
    sim_cmd->add_option("--model-name", spec.model_name, "name written to meta.json");
    sim_cmd->add_option("--out", sim_out, "output bundle directory")->required();
    sim_cmd->callback([&] {
        gh::simlab::SimBundle sim = gh::simlab::generate(spec);
        gh::simlab::write(sim, sim_out);
        std::printf("simulate: %zu tokens, %zu planted -> %s\n", spec.n, sim.planted.size(),
                    sim_out.c_str());
    });

    // hunt
    auto* hunt_cmd = app.add_subcommand("hunt", "iteratively cluster, sample, and shrink");
    HuntArgs hunt_args;
    hunt_cmd->add_option("--embeddings", hunt_args.embeddings, "model bundle directory")
        ->required();
    hunt_cmd->add_option("--out", hunt_args.out, "report path")->required();
    hunt_cmd->add_option("--dump-graph", hunt_args.dump_graph,
                         "also write the full-vocabulary graph as JSONL edges");
    hunt_cmd->add_option("--dump-partition", hunt_args.dump_partition,
                         "also write a full-vocabulary partition as a JSON array");
    add_hunter_flags(hunt_cmd, hunt_args);
    add_oracle_flags(hunt_cmd, hunt_args);
    hunt_cmd->callback([&] { run_hunt(hunt_cmd, hunt_args, false); });

    // traverse
    auto* trav_cmd = app.add_subcommand("traverse", "oracle-test every token in the vocabulary");
    HuntArgs trav_args;
    trav_cmd->add_option("--embeddings", trav_args.embeddings, "model bundle directory")
        ->required();
    trav_cmd->add_option("--out", trav_args.out, "report path")->required();
    add_hunter_flags(trav_cmd, trav_args);
    add_oracle_flags(trav_cmd, trav_args);
    trav_cmd->callback([&] { run_hunt(trav_cmd, trav_args, true); });

    // baseline
    auto* base_cmd = app.add_subcommand("baseline", "run a comparison detector");
    std::string method, base_embeddings, base_out, base_wordlist;
    double base_fraction = 0.5;
    std::uint64_t base_seed = 0;
    gh::baselines::KMeansOptions km;
    base_cmd->add_option("--method", method, "random | rule | kmeans")
        ->required()
        ->check(CLI::IsMember({"random", "rule", "kmeans"}));
    base_cmd->add_option("--embeddings", base_embeddings, "model bundle directory")->required();
    base_cmd->add_option("--out", base_out, "report path")->required();
    base_cmd->add_option("--fraction", base_fraction, "sampled fraction (random/rule)");
    base_cmd->add_option("--seed", base_seed, "random seed");
    base_cmd->add_option("--wordlist", base_wordlist, "dictionary file for the rule filter");
    base_cmd->add_option("--kmeans-k", km.k, "cluster count (kmeans)");
    base_cmd->add_option("--kmeans-iters", km.max_iters, "iteration cap (kmeans)");
    bool plain_seeding = false;
    base_cmd->add_flag("--plain-seeding", plain_seeding,
                       "seed kmeans with uniform draws instead of spread-out centers");
    int base_jobs = 0;
    base_cmd->add_option("--jobs", base_jobs, "cap on worker threads");
    base_cmd->callback([&] {
        if (base_jobs > 0) gh::util::set_parallel_workers(base_jobs);
        gh::ModelBundle bundle = gh::embedstore::load_model_bundle(base_embeddings);
        std::vector<gh::TokenId> picked;
        std::uint32_t iterations = 0;
        if (method == "random") {
            picked = gh::baselines::random_sampling(bundle.vocab.size(), base_fraction, base_seed);
        } else if (method == "rule") {
            if (base_wordlist.empty())
                throw gh::Error(gh::Errc::ConfigError, "--method rule requires --wordlist");
            gh::taxonomy::WordList words = gh::taxonomy::WordList::load(base_wordlist);
            picked = gh::baselines::rule_based_sampling(bundle.vocab, base_fraction, base_seed,
                                                        words);
        } else {
            km.seed = base_seed;
            km.plusplus_seeding = !plain_seeding;
            gh::baselines::KMeansResult res =
                gh::baselines::kmeans_centroid_cluster(bundle.embeddings, km);
            picked = res.members;
            iterations = res.iterations;
        }
        ordered_json j;
        j["schema_version"] = 1;
        ordered_json cfg;
        cfg["method"] = method;
        if (method != "kmeans") cfg["fraction"] = base_fraction;
        if (method == "rule") cfg["wordlist"] = base_wordlist;
        if (method == "kmeans") {
            cfg["k"] = km.k;
            cfg["max_iters"] = km.max_iters;
            cfg["plusplus_seeding"] = km.plusplus_seeding;
        }
        cfg["seed"] = base_seed;
        j["config"] = std::move(cfg);
        j["termination"] = "baseline_" + method;
        j["iterations"] = iterations;
        j["ledger"] = {{"queries", 0}, {"prompt_tokens", 0}, {"completion_tokens", 0},
                       {"wall_ms", 0}};
        ordered_json tokens = ordered_json::array();
        for (gh::TokenId id : picked)
            tokens.push_back({{"id", id},
                              {"string", bundle.vocab.at(id)},
                              {"score", nullptr},
                              {"symptom", nullptr}});
        j["glitch_tokens"] = std::move(tokens);
        write_json_file(j, base_out);
        std::printf("baseline %s: %zu candidate tokens -> %s\n", method.c_str(), picked.size(),
                    base_out.c_str());
    });

    // classify
    auto* cls_cmd = app.add_subcommand("classify", "token type classification");
    std::string cls_tokens, cls_wordlist, cls_out;
    cls_cmd->add_option("--tokens", cls_tokens, "JSON array of token strings")->required();
    cls_cmd->add_option("--wordlist", cls_wordlist, "dictionary file")->required();
    cls_cmd->add_option("--out", cls_out, "report path (stdout when omitted)");
    cls_cmd->callback([&] {
        json input = load_json_file(cls_tokens);
        if (!input.is_array())
            throw gh::Error(gh::Errc::ConfigError, cls_tokens + ": expected an array of strings");
        gh::taxonomy::WordList words = gh::taxonomy::WordList::load(cls_wordlist);
        ordered_json j;
        j["schema_version"] = 1;
        ordered_json rows = ordered_json::array();
        for (const auto& v : input) {
            if (!v.is_string())
                throw gh::Error(gh::Errc::ConfigError,
                                cls_tokens + ": expected an array of strings");
            std::string s = v.get<std::string>();
            rows.push_back({{"string", s},
                            {"type", gh::taxonomy::token_type_name(
                                         gh::taxonomy::classify_token_type(s, words))}});
        }
        j["tokens"] = std::move(rows);
        if (cls_out.empty())
            std::cout << j.dump(2) << "\n";
        else
            write_json_file(j, cls_out);
    });

    // scan
    auto* scan_cmd = app.add_subcommand("scan", "count glitch-token occurrences in a stream");
    std::string scan_stream, scan_set, scan_embeddings, scan_out;
    std::uint64_t scan_n = 0;
    scan_cmd->add_option("--stream", scan_stream, "JSONL file, one id array per line")
        ->required();
    scan_cmd->add_option("--glitch-set", scan_set,
                         "hunt report or bare id array naming the glitch tokens")
        ->required();
    scan_cmd->add_option("--n", scan_n, "vocabulary size");
    scan_cmd->add_option("--embeddings", scan_embeddings,
                         "model bundle directory (alternative to --n)");
    scan_cmd->add_option("--out", scan_out, "report path (stdout when omitted)");
    scan_cmd->callback([&] {
        std::size_t vocab_size = scan_n;
        if (vocab_size == 0) {
            if (scan_embeddings.empty())
                throw gh::Error(gh::Errc::ConfigError, "scan needs --n or --embeddings");
            vocab_size = gh::embedstore::load_model_bundle(scan_embeddings).vocab.size();
        }
        std::vector<gh::TokenId> ids = gh::hunter::load_report_glitch_ids(scan_set);
        std::unordered_set<gh::TokenId> glitch(ids.begin(), ids.end());
        auto stream = gh::corpus::read_stream_jsonl(scan_stream, vocab_size);
        gh::corpus::ScanSummary s = gh::corpus::scan(stream, glitch);
        ordered_json j;
        j["schema_version"] = 1;
        j["glitch_count"] = s.glitch_count;
        j["total_count"] = s.total_count;
        j["ratio"] = s.ratio;
        j["percent"] = gh::corpus::format_percent(s.ratio);
        if (scan_out.empty())
            std::cout << j.dump(2) << "\n";
        else
            write_json_file(j, scan_out);
    });

    // score
    auto* score_cmd = app.add_subcommand("score", "precision/recall of a report against truth");
    std::string score_report, score_truth, score_out;
    score_cmd->add_option("report", score_report, "hunt/baseline report or bare id array")
        ->required();
    score_cmd->add_option("truth", score_truth, "truth.json")->required();
    score_cmd->add_option("--out", score_out, "write the summary as JSON too");
    score_cmd->callback([&] {
        std::vector<gh::TokenId> reported = gh::hunter::load_report_glitch_ids(score_report);
        std::vector<gh::TokenId> truth = gh::simlab::load_truth(score_truth);
        gh::metrics::EvalSummary s = gh::metrics::score(reported, truth);
        std::printf("precision=%.4f recall=%.4f tp=%lld fp=%lld fn=%lld\n", s.precision, s.recall,
                    (long long)s.counts.tp, (long long)s.counts.fp, (long long)s.counts.fn);
        if (!score_out.empty()) {
            ordered_json j;
            j["schema_version"] = 1;
            j["precision"] = s.precision;
            j["recall"] = s.recall;
            j["tp"] = s.counts.tp;
            j["fp"] = s.counts.fp;
            j["fn"] = s.counts.fn;
            write_json_file(j, score_out);
        }
    });

    try {
        app.parse(argc, argv);
        return 0;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const gh::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        if (e.code() == gh::Errc::ConfigError || e.code() == gh::Errc::SpecInvalid) return 2;
        if (e.oracle_related()) return 3;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
