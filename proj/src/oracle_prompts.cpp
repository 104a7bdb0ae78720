#include "glitchhunter/oracle_prompts.hpp"

#include <cctype>

#include "glitchhunter/error.hpp"
#include "glitchhunter/util.hpp"

namespace glitchhunter::oracle {

namespace {

constexpr std::string_view kPlaceholder = "<token_string>";

constexpr std::string_view kRepetitionTemplate =
    "Question: Please can you repeat the string `Hello' and return back to me? Answer: Of "
    "course! Here is the repeated string: Hello.\n"
    "Question: Please can you repeat the string `215' and return back to me? Answer: Of course! "
    "Here is the repeated string: 215.\n"
    "Question: Please can you repeat the string `\"#%$!' and return back to me? Answer: Of "
    "course! Here is the repeated string:\"#%!\n"
    "Question: Please can you repeat the string `<token_string>' and return back to me? Answer: "
    "Of course! Here is the repeated string";

constexpr std::string_view kSpellingTemplate =
    "Question: Please can you spell out the string `Hello' with hyphens between each letter? "
    "Answer: Of course! The spelling of the string is: H-e-l-l-o\n"
    "Question: Please can you spell out the string `215' with hyphens between each letter? "
    "Answer: Of course! The spelling of the string is:2-1-5\n"
    "Question: Please can you spell out the string `\"#%!' with hyphens between each letter? "
    "Answer: Of course! The spelling of the string is:\"-#-%-!\n"
    "Question: Please can you spell out the string `<token_string>' with hyphens between each "
    "letter? Answer: Of course! The spelling of the string is:";

constexpr std::string_view kLengthTemplate =
    "Question: What is the length of this string `Hello'? Answer: The length of this string is "
    "5.\n"
    "Question: What is the length of this string `215'? Answer: The length of this string is 3.\n"
    "Question: What is the length of this string `\"#%!'? Answer: The length of this string is "
    "4.\n"
    "Question: What is the length of this string `<token_string>'? Answer: The length of this "
    "string is";

}  // namespace

const char* task_name(ProxyTask task) {
    switch (task) {
        case ProxyTask::Repetition: return "Repetition";
        case ProxyTask::Spelling: return "Spelling";
        case ProxyTask::Length: return "Length";
    }
    return "Unknown";
}

std::string_view template_text(ProxyTask task) {
    switch (task) {
        case ProxyTask::Repetition: return kRepetitionTemplate;
        case ProxyTask::Spelling: return kSpellingTemplate;
        case ProxyTask::Length: return kLengthTemplate;
    }
    throw Error(Errc::SpecInvalid, "unknown task");
}

std::array<std::string_view, 3> template_primers() {
    return {std::string_view("Of course! Here is the repeated string"),
            std::string_view("Of course! The spelling of the string is:"),
            std::string_view("The length of this string is")};
}

std::string render_prompt(ProxyTask task, std::string_view token) {
    std::string out(template_text(task));
    std::size_t pos = out.find(kPlaceholder);
    out.replace(pos, kPlaceholder.size(), token);
    return out;
}

std::string expected_answer(ProxyTask task, std::string_view token) {
    switch (task) {
        case ProxyTask::Repetition:
            return std::string(token);
        case ProxyTask::Spelling: {
            auto scalars = util::utf8_decode(token);
            std::string out;
            for (std::size_t i = 0; i < scalars.size(); ++i) {
                if (i) out.push_back('-');
                out += util::utf8_encode_one(scalars[i]);
            }
            return out;
        }
        case ProxyTask::Length:
            return std::to_string(util::utf8_length(token));
    }
    throw Error(Errc::SpecInvalid, "unknown task");
}

std::string normalize_response(std::string_view response) {
    std::string t = util::trim(response);
    if (t.size() >= 2) {
        char first = t.front(), last = t.back();
        bool wrapped = (first == '"' && last == '"') || (first == '\'' && last == '\'') ||
                       (first == '`' && (last == '\'' || last == '`'));
        if (wrapped) t = t.substr(1, t.size() - 2);
    }
    std::size_t brk = t.find_first_of("\r\n");
    if (brk != std::string::npos) t.resize(brk);
    return util::trim(t);
}

int evaluate_response(ProxyTask task, std::string_view token, std::string_view response) {
    std::string expected = expected_answer(task, token);
    if (task == ProxyTask::Length) {
        std::string norm = normalize_response(response);
        std::size_t i = 0;
        while (i < norm.size() && !std::isdigit((unsigned char)norm[i])) ++i;
        if (i == norm.size()) return 0;
        std::size_t j = i;
        while (j < norm.size() && std::isdigit((unsigned char)norm[j])) ++j;
        std::string digits = norm.substr(i, j - i);
        // Leading zeros collapse; a run too long to be a real count can't match.
        std::size_t z = 0;
        while (z + 1 < digits.size() && digits[z] == '0') ++z;
        digits = digits.substr(z);
        return digits == expected ? 1 : 0;
    }
    return normalize_response(response) == normalize_response(expected) ? 1 : 0;
}

}  // namespace glitchhunter::oracle
