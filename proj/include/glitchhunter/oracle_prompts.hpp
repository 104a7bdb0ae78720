#pragma once

#include <array>
#include <string>
#include <string_view>

namespace glitchhunter::oracle {

enum class ProxyTask { Repetition, Spelling, Length };

inline constexpr std::array<ProxyTask, 3> kTasks = {ProxyTask::Repetition, ProxyTask::Spelling,
                                                    ProxyTask::Length};

const char* task_name(ProxyTask task);

// Few-shot template for a task, with the <token_string> placeholder still in
// place. The texts are frozen; data/prompts/ holds byte-identical copies and
// a test pins the two together.
std::string_view template_text(ProxyTask task);

// Trailing answer fragments the templates prime the model with.
std::array<std::string_view, 3> template_primers();

std::string render_prompt(ProxyTask task, std::string_view token);

// Repetition: the token verbatim. Spelling: Unicode scalar values joined by
// "-". Length: decimal count of scalar values.
std::string expected_answer(ProxyTask task, std::string_view token);

// Trim, strip one pair of wrapping quotes ("...", '...', `...', `...`), keep
// only the first line, trim again. Both sides of a comparison go through
// this, so cosmetic wrapping never decides a verdict.
std::string normalize_response(std::string_view response);

// 1 if the response answers the task for this token, else 0. Length is judged
// by the first decimal integer found in the normalized response.
int evaluate_response(ProxyTask task, std::string_view token, std::string_view response);

}  // namespace glitchhunter::oracle
