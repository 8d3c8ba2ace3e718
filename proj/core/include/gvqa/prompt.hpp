#pragma once

#include <string>

namespace gvqa {

enum class AnswerSource { Model, Oracle, External };

const char* to_string(AnswerSource s);

// Grounding query for stage 2, carrying its provenance.
struct Prompt {
    std::string text;
    std::string question;
    std::string answer;
    AnswerSource answer_source{AnswerSource::Oracle};
};

// "<question> Track the <answer>", byte exact, no normalization. The answer
// must be non-empty after trimming.
Prompt compose(const std::string& question, const std::string& answer,
               AnswerSource source = AnswerSource::Oracle);

} // namespace gvqa
