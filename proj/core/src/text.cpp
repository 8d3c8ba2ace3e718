#include "gvqa/text.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace gvqa {

std::vector<std::string> tokenize(const std::string& text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    std::istringstream is(lower);
    std::vector<std::string> out;
    std::string tok;
    while (is >> tok) {
        out.push_back(tok);
    }
    return out;
}

TokenVocab TokenVocab::from_corpus(const std::vector<std::string>& texts) {
    std::set<std::string> unique;
    for (const auto& t : texts) {
        for (auto& tok : tokenize(t)) {
            unique.insert(std::move(tok));
        }
    }
    TokenVocab v;
    v.tokens_.push_back(kUnk);
    for (const auto& tok : unique) {
        v.tokens_.push_back(tok);
    }
    for (std::size_t i = 0; i < v.tokens_.size(); ++i) {
        v.index_[v.tokens_[i]] = static_cast<int>(i);
    }
    return v;
}

int TokenVocab::id_or_unk(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? 0 : it->second;
}

std::vector<int> TokenVocab::encode(const std::string& text) const {
    std::vector<int> ids;
    for (const auto& tok : tokenize(text)) {
        ids.push_back(id_or_unk(tok));
    }
    return ids;
}

} // namespace gvqa
