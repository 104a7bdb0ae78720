#include "glitchhunter/corpus.hpp"

#include <cstdio>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

#include "glitchhunter/error.hpp"
#include "glitchhunter/util.hpp"

namespace glitchhunter::corpus {

std::vector<std::vector<TokenId>> read_stream_jsonl(const std::filesystem::path& path,
                                                    std::size_t vocab_size) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::MissingFile, path.string());
    std::vector<std::vector<TokenId>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::IoFailure,
                        path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_array())
            throw Error(Errc::IoFailure,
                        path.string() + ":" + std::to_string(line_no) + ": line is not an array");
        std::vector<TokenId> seq;
        seq.reserve(j.size());
        for (const auto& v : j) {
            if (!v.is_number_integer() || v.get<std::int64_t>() < 0)
                throw Error(Errc::OutOfRangeId, path.string() + ":" + std::to_string(line_no) +
                                                    ": ids must be non-negative integers");
            std::int64_t id = v.get<std::int64_t>();
            if (std::uint64_t(id) >= vocab_size)
                throw Error(Errc::OutOfRangeId, "id " + std::to_string(id) + " at line " +
                                                    std::to_string(line_no) + " exceeds vocab size " +
                                                    std::to_string(vocab_size));
            seq.push_back(TokenId(id));
        }
        out.push_back(std::move(seq));
    }
    return out;
}

ScanSummary scan(const std::vector<std::vector<TokenId>>& stream,
                 const std::unordered_set<TokenId>& glitch_set) {
    ScanSummary s;
    for (const auto& seq : stream) {
        s.total_count += std::int64_t(seq.size());
        for (TokenId id : seq)
            if (glitch_set.count(id)) ++s.glitch_count;
    }
    s.ratio = s.total_count == 0 ? 0.0 : double(s.glitch_count) / double(s.total_count);
    return s;
}

TokenizeResult greedy_tokenize(std::string_view text, const Vocabulary& vocab) {
    std::unordered_map<std::string_view, TokenId> lookup;
    std::size_t max_len = 0;
    for (std::size_t id = 0; id < vocab.size(); ++id) {
        const std::string& s = vocab.strings[id];
        if (s.empty()) continue;
        max_len = std::max(max_len, s.size());
        lookup.try_emplace(s, TokenId(id));  // duplicate strings keep the lowest id
    }

    TokenizeResult out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t limit = std::min(max_len, text.size() - pos);
        bool matched = false;
        for (std::size_t len = limit; len >= 1; --len) {
            auto it = lookup.find(text.substr(pos, len));
            if (it != lookup.end()) {
                out.ids.push_back(it->second);
                pos += len;
                matched = true;
                break;
            }
        }
        if (!matched) {
            // Skip one whole scalar so we never split a UTF-8 sequence.
            unsigned char b0 = (unsigned char)text[pos];
            std::size_t step = 1;
            if ((b0 & 0xE0) == 0xC0)
                step = 2;
            else if ((b0 & 0xF0) == 0xE0)
                step = 3;
            else if ((b0 & 0xF8) == 0xF0)
                step = 4;
            step = std::min(step, text.size() - pos);
            out.skipped.emplace_back(out.ids.size(), std::string(text.substr(pos, step)));
            pos += step;
        }
    }
    return out;
}

std::string format_percent(double ratio, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f%%", decimals, ratio * 100.0);
    return buf;
}

}  // namespace glitchhunter::corpus
