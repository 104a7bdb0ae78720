#include "glitchhunter/taxonomy.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "glitchhunter/error.hpp"
#include "glitchhunter/util.hpp"

namespace glitchhunter::taxonomy {

const char* token_type_name(TokenType t) {
    switch (t) {
        case TokenType::WordToken: return "WordToken";
        case TokenType::LetterToken: return "LetterToken";
        case TokenType::CharacterToken: return "CharacterToken";
        case TokenType::LetterCharacterToken: return "LetterCharacterToken";
        case TokenType::SpecialToken: return "SpecialToken";
    }
    return "Unknown";
}

const char* symptom_name(Symptom s) {
    switch (s) {
        case Symptom::SpellingMistake: return "SpellingMistake";
        case Symptom::Incapability: return "Incapability";
        case Symptom::HallucinatoryCompletion: return "HallucinatoryCompletion";
        case Symptom::QuestionRepetition: return "QuestionRepetition";
        case Symptom::RandomCharacters: return "RandomCharacters";
    }
    return "Unknown";
}

WordList WordList::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::MissingFile, path.string());
    WordList wl;
    std::string line;
    while (std::getline(in, line)) {
        std::string w = util::to_lower(util::trim(line));
        if (w.empty()) continue;
        wl.max_len_ = std::max(wl.max_len_, w.size());
        wl.words_.insert(std::move(w));
    }
    return wl;
}

WordList WordList::from_words(const std::vector<std::string>& words) {
    WordList wl;
    for (const auto& word : words) {
        std::string w = util::to_lower(util::trim(word));
        if (w.empty()) continue;
        wl.max_len_ = std::max(wl.max_len_, w.size());
        wl.words_.insert(std::move(w));
    }
    return wl;
}

bool WordList::contains(std::string_view word) const {
    return words_.count(util::to_lower(word)) > 0;
}

bool word_break(std::string_view letters, const WordList& words) {
    if (letters.empty() || words.empty()) return false;
    std::string s = util::to_lower(letters);
    std::size_t n = s.size();
    std::size_t max_len = std::min(words.max_word_length(), n);
    std::vector<char> reachable(n + 1, 0);
    reachable[0] = 1;
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t len = 1; len <= std::min(i, max_len); ++len) {
            if (!reachable[i - len]) continue;
            if (words.contains(std::string_view(s).substr(i - len, len))) {
                reachable[i] = 1;
                break;
            }
        }
    }
    return reachable[n] != 0;
}

TokenType classify_token_type(std::string_view token, const WordList& words) {
    if (token.empty()) throw Error(Errc::EmptyToken, "classify_token_type");
    for (unsigned char c : token)
        if (c > 0x7F) return TokenType::SpecialToken;

    std::string_view body = token;
    if (body.front() == ' ') body.remove_prefix(1);

    bool has_letter = false;
    bool all_letters = !body.empty();
    for (unsigned char c : body) {
        if (std::isalpha(c))
            has_letter = true;
        else
            all_letters = false;
    }
    if (!has_letter) return TokenType::CharacterToken;
    if (!all_letters) return TokenType::LetterCharacterToken;
    return word_break(body, words) ? TokenType::WordToken : TokenType::LetterToken;
}

RefusalPatterns::RefusalPatterns()
    : patterns_{"cannot assist", "can not assist", "I'm sorry", "is empty", "no string provided"} {}

RefusalPatterns RefusalPatterns::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::MissingFile, path.string());
    RefusalPatterns rp;
    rp.patterns_.clear();
    std::string line;
    while (std::getline(in, line)) {
        std::string p = util::trim(line);
        if (!p.empty()) rp.patterns_.push_back(std::move(p));
    }
    return rp;
}

bool RefusalPatterns::matches(std::string_view response) const {
    for (const auto& p : patterns_)
        if (util::icontains(response, p)) return true;
    return false;
}

namespace {

bool has_ascii_letter(std::string_view s) {
    for (unsigned char c : s)
        if (c < 0x80 && std::isalpha(c)) return true;
    return false;
}

bool has_ascii_alnum(std::string_view s) {
    for (unsigned char c : s)
        if (c < 0x80 && std::isalnum(c)) return true;
    return false;
}

// Any 6-scalar window of `needle_src` occurring verbatim in `hay_src`.
bool shares_six_scalar_run(std::string_view needle_src, std::string_view hay_src) {
    std::vector<char32_t> needle = util::utf8_decode(needle_src);
    if (needle.size() < 6) return false;
    std::vector<char32_t> hay_vec = util::utf8_decode(hay_src);
    std::u32string hay(hay_vec.begin(), hay_vec.end());
    for (std::size_t i = 0; i + 6 <= needle.size(); ++i) {
        std::u32string window(needle.begin() + i, needle.begin() + i + 6);
        if (hay.find(window) != std::u32string::npos) return true;
    }
    return false;
}

}  // namespace

Symptom classify_symptom(oracle::ProxyTask task, std::string_view token, std::string_view response,
                         const RefusalPatterns& refusals) {
    if (task == oracle::ProxyTask::Length) return Symptom::HallucinatoryCompletion;

    if (refusals.matches(response)) return Symptom::Incapability;

    std::string norm = oracle::normalize_response(response);
    if (shares_six_scalar_run(norm, oracle::template_text(task)))
        return Symptom::QuestionRepetition;
    for (std::string_view primer : oracle::template_primers())
        if (norm == oracle::normalize_response(primer)) return Symptom::QuestionRepetition;

    if ((!has_ascii_letter(norm) && !has_ascii_letter(token)) || !has_ascii_alnum(norm))
        return Symptom::RandomCharacters;

    std::string expected = oracle::normalize_response(oracle::expected_answer(task, token));
    std::size_t dist = util::levenshtein(norm, expected);
    std::size_t longer = std::max(util::utf8_length(norm), util::utf8_length(expected));
    if (longer > 0 && double(dist) / double(longer) <= 0.5) return Symptom::SpellingMistake;

    return Symptom::HallucinatoryCompletion;
}

}  // namespace glitchhunter::taxonomy
