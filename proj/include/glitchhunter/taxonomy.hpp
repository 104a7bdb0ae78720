#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "glitchhunter/oracle_prompts.hpp"

namespace glitchhunter::taxonomy {

enum class TokenType {
    WordToken,             // ASCII letters only, segmentable into dictionary words
    LetterToken,           // ASCII letters only, not segmentable
    CharacterToken,        // ASCII, no letters at all
    LetterCharacterToken,  // ASCII mix of letters and other characters
    SpecialToken,          // anything containing a non-ASCII scalar
};

enum class Symptom {
    SpellingMistake,
    Incapability,
    HallucinatoryCompletion,
    QuestionRepetition,
    RandomCharacters,
};

const char* token_type_name(TokenType t);
const char* symptom_name(Symptom s);

// Case-insensitive dictionary for segmentation and the rule-based baseline.
class WordList {
public:
    WordList() = default;
    static WordList load(const std::filesystem::path& path);
    static WordList from_words(const std::vector<std::string>& words);

    bool contains(std::string_view word) const;
    bool empty() const { return words_.empty(); }
    std::size_t size() const { return words_.size(); }
    std::size_t max_word_length() const { return max_len_; }

private:
    std::unordered_set<std::string> words_;  // stored lowercase
    std::size_t max_len_ = 0;
};

// True when the (lowercased) string splits completely into dictionary words.
bool word_break(std::string_view letters, const WordList& words);

TokenType classify_token_type(std::string_view token, const WordList& words);

// Phrases whose presence marks a refusal. Matching is case-insensitive
// substring over the raw response.
class RefusalPatterns {
public:
    RefusalPatterns();  // built-in defaults
    static RefusalPatterns load(const std::filesystem::path& path);

    bool matches(std::string_view response) const;
    const std::vector<std::string>& patterns() const { return patterns_; }

private:
    std::vector<std::string> patterns_;
};

// Ordered rules; the first that fires wins. The caller passes the response of
// a task the token already failed.
Symptom classify_symptom(oracle::ProxyTask task, std::string_view token,
                         std::string_view response,
                         const RefusalPatterns& refusals = RefusalPatterns());

}  // namespace glitchhunter::taxonomy
