#include "gvqa/prompt.hpp"

#include "gvqa/error.hpp"

namespace gvqa {

namespace {

bool blank(const std::string& s) {
    for (char c : s) {
        if (c != ' ' && c != '\t' && c != '\n' && c != '\r') {
            return false;
        }
    }
    return true;
}

} // namespace

const char* to_string(AnswerSource s) {
    switch (s) {
    case AnswerSource::Model: return "model";
    case AnswerSource::Oracle: return "oracle";
    case AnswerSource::External: return "external";
    }
    return "?";
}

Prompt compose(const std::string& question, const std::string& answer, AnswerSource source) {
    require(!question.empty(), "compose: empty question");
    require(!blank(answer), "compose: empty answer");
    Prompt p;
    p.question = question;
    p.answer = answer;
    p.answer_source = source;
    p.text = question + " Track the " + answer;
    return p;
}

} // namespace gvqa
