#include "glitchhunter/oracle.hpp"

#include <cstdlib>
#include <exception>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "glitchhunter/error.hpp"
#include "glitchhunter/util.hpp"

namespace glitchhunter::oracle {

std::string mock_corrupt(std::string_view token) {
    std::vector<char32_t> scalars = util::utf8_decode(token);
    if (scalars.empty()) return std::string(token);
    std::size_t mid = scalars.size() / 2;
    scalars[mid] = U'*';
    std::string out = util::utf8_encode(scalars);
    if (out == token) {
        scalars[mid] = U'#';
        out = util::utf8_encode(scalars);
    }
    return out;
}

MockOracleClient::MockOracleClient(const Vocabulary& vocab, std::span<const TokenId> planted_ids) {
    for (TokenId id : planted_ids) {
        if (id >= vocab.size())
            throw Error(Errc::OutOfRangeId, "planted id " + std::to_string(id));
        planted_.insert(vocab.at(id));
    }
}

std::string MockOracleClient::complete(const std::string& prompt) {
    // Prompts come from render_prompt, so the token is recoverable as the
    // bytes between the fixed template prefix and suffix.
    for (ProxyTask task : kTasks) {
        std::string_view tmpl = template_text(task);
        std::size_t pos = tmpl.find("<token_string>");
        std::string_view prefix = tmpl.substr(0, pos);
        std::string_view suffix = tmpl.substr(pos + std::string_view("<token_string>").size());
        if (prompt.size() < prefix.size() + suffix.size()) continue;
        if (prompt.compare(0, prefix.size(), prefix) != 0) continue;
        if (prompt.compare(prompt.size() - suffix.size(), suffix.size(), suffix) != 0) continue;
        std::string token = prompt.substr(prefix.size(), prompt.size() - prefix.size() - suffix.size());

        if (planted_.count(token) == 0) return expected_answer(task, token);
        std::string corrupted = mock_corrupt(token);
        return expected_answer(task, corrupted);
    }
    throw Error(Errc::OracleProtocolError, "prompt does not match any proxy task template");
}

HttpOracleClient::HttpOracleClient(const OracleConfig& config) : config_(config) {
    const std::string& url = config_.endpoint_url;
    std::size_t scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw Error(Errc::ConfigError, "endpoint url needs a scheme: " + url);
    std::size_t path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
        base_ = url;
        path_ = "/";
    } else {
        base_ = url.substr(0, path_start);
        path_ = url.substr(path_start);
    }
}

std::string HttpOracleClient::complete(const std::string& prompt) {
    httplib::Client cli(base_);
    if (!cli.is_valid()) throw Error(Errc::OracleNetwork, "invalid endpoint " + base_);
    auto seconds = time_t(config_.request_timeout_s);
    auto micros = time_t((config_.request_timeout_s - double(seconds)) * 1e6);
    cli.set_connection_timeout(seconds, micros);
    cli.set_read_timeout(seconds, micros);
    cli.set_write_timeout(seconds, micros);

    httplib::Headers headers;
    const char* key = std::getenv("GLITCH_ORACLE_KEY");
    if (key && *key) headers.emplace("Authorization", std::string("Bearer ") + key);

    nlohmann::json body;
    body["model"] = config_.model_name;
    body["prompt"] = prompt;
    body["temperature"] = config_.temperature;
    body["max_tokens"] = config_.max_tokens;

    auto res = cli.Post(path_, headers, body.dump(), "application/json");
    if (!res) {
        httplib::Error err = res.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
            err == httplib::Error::Write)
            throw Error(Errc::OracleTimeout, httplib::to_string(err));
        throw Error(Errc::OracleNetwork, httplib::to_string(err));
    }
    if (res->status != 200)
        throw Error(Errc::OracleHttpStatus, "HTTP " + std::to_string(res->status));

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::OracleProtocolError, std::string("bad JSON: ") + e.what());
    }
    try {
        const nlohmann::json& choice = j.at("choices").at(0);
        if (config_.chat_mode) return choice.at("message").at("content").get<std::string>();
        return choice.at("text").get<std::string>();
    } catch (const nlohmann::json::exception&) {
        throw Error(Errc::OracleProtocolError,
                    config_.chat_mode ? "response lacks choices[0].message.content"
                                      : "response lacks choices[0].text");
    }
}

std::unique_ptr<OracleClient> make_client(const OracleConfig& config, const Vocabulary& vocab,
                                          std::span<const TokenId> planted_ids) {
    if (config.endpoint_url.empty())
        return std::make_unique<MockOracleClient>(vocab, planted_ids);
    return std::make_unique<HttpOracleClient>(config);
}

namespace {

std::string query_with_retry(OracleClient& client, const std::string& prompt,
                             const OracleConfig& config, BudgetLedger& ledger) {
    for (int attempt = 0;; ++attempt) {
        try {
            return client.complete(prompt);
        } catch (const Error& e) {
            if (!e.oracle_related() || attempt >= config.max_retries) throw;
            ++ledger.retries;
        }
    }
}

}  // namespace

GlitchVerdict glitch_test(TokenId token, const Vocabulary& vocab, const OracleConfig& config,
                          OracleClient& client, BudgetLedger& ledger) {
    if (token >= vocab.size()) throw Error(Errc::OutOfRangeId, std::to_string(token));
    const std::string& text = vocab.at(token);
    if (text.empty()) throw Error(Errc::EmptyToken, "token " + std::to_string(token));
    if (config.repeats < 1) throw Error(Errc::ConfigError, "repeats must be >= 1");

    GlitchVerdict v;
    v.token = token;
    int passed = 0;
    for (std::size_t ti = 0; ti < kTasks.size(); ++ti) {
        ProxyTask task = kTasks[ti];
        std::string prompt = render_prompt(task, text);
        int successes = 0;
        for (int r = 0; r < config.repeats; ++r) {
            std::string response = query_with_retry(client, prompt, config, ledger);
            ++ledger.queries;
            ledger.prompt_tokens += std::int64_t(util::whitespace_token_count(prompt));
            ledger.completion_tokens += std::int64_t(util::whitespace_token_count(response));
            int per_run = evaluate_response(task, text, response);
            successes += per_run;
            if (per_run == 0 && v.outcomes[ti].failing_response.empty())
                v.outcomes[ti].failing_response = response;
        }
        v.outcomes[ti].per = (2 * successes > config.repeats) ? 1 : 0;
        passed += v.outcomes[ti].per;
    }
    v.score = -passed;
    v.is_glitch = v.score >= config.glitch_threshold;
    for (std::size_t ti = 0; ti < kTasks.size(); ++ti) {
        if (v.outcomes[ti].per == 0) {
            v.symptom = taxonomy::classify_symptom(kTasks[ti], text, v.outcomes[ti].failing_response);
            break;
        }
    }
    return v;
}

std::vector<GlitchVerdict> test_tokens(std::span<const TokenId> ids, const Vocabulary& vocab,
                                       const OracleConfig& config, OracleClient& client,
                                       BudgetLedger& ledger) {
    std::vector<GlitchVerdict> out(ids.size());
    std::size_t workers = std::size_t(std::max(1, config.concurrency_limit));
    workers = std::min(workers, ids.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < ids.size(); ++i)
            out[i] = glitch_test(ids[i], vocab, config, client, ledger);
        return out;
    }

    std::vector<BudgetLedger> ledgers(workers);
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        threads.emplace_back([&, t]() {
            try {
                for (std::size_t i = t; i < ids.size(); i += workers)
                    out[i] = glitch_test(ids[i], vocab, config, client, ledgers[t]);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : threads) th.join();
    for (const BudgetLedger& l : ledgers) {
        ledger.queries += l.queries;
        ledger.prompt_tokens += l.prompt_tokens;
        ledger.completion_tokens += l.completion_tokens;
        ledger.retries += l.retries;
    }
    for (std::size_t t = 0; t < workers; ++t)
        if (errors[t]) std::rethrow_exception(errors[t]);
    return out;
}

}  // namespace glitchhunter::oracle
