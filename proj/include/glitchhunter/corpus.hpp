#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include "glitchhunter/embedstore.hpp"

namespace glitchhunter::corpus {

// One sequence per JSONL line, each line a JSON array of token ids. Ids are
// validated against the vocabulary size.
std::vector<std::vector<TokenId>> read_stream_jsonl(const std::filesystem::path& path,
                                                    std::size_t vocab_size);

struct ScanSummary {
    std::int64_t glitch_count = 0;
    std::int64_t total_count = 0;
    double ratio = 0.0;  // 0 when the stream is empty
};

ScanSummary scan(const std::vector<std::vector<TokenId>>& stream,
                 const std::unordered_set<TokenId>& glitch_set);

// Longest-prefix tokenization for raw text whose true tokenizer is unknown.
// A scalar no vocabulary entry covers is skipped and recorded; results are
// approximate by construction and reports must say so.
struct TokenizeResult {
    std::vector<TokenId> ids;
    // (position in ids before which the skip happened, skipped scalar bytes)
    std::vector<std::pair<std::size_t, std::string>> skipped;

    std::int64_t unencodable() const { return std::int64_t(skipped.size()); }
};

TokenizeResult greedy_tokenize(std::string_view text, const Vocabulary& vocab);

// "4.17%" style formatting with the given number of decimals.
std::string format_percent(double ratio, int decimals = 2);

}  // namespace glitchhunter::corpus
