#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace gvqa {

// Lowercase + whitespace split. Punctuation stays attached to its word;
// unseen tokens map to UNK at lookup time.
std::vector<std::string> tokenize(const std::string& text);

class TokenVocab {
public:
    static constexpr const char* kUnk = "<unk>";

    TokenVocab() = default;

    // Unique sorted tokens from the corpus, with UNK at index 0.
    static TokenVocab from_corpus(const std::vector<std::string>& texts);

    [[nodiscard]] int id_or_unk(const std::string& token) const;
    [[nodiscard]] std::vector<int> encode(const std::string& text) const;
    [[nodiscard]] const std::vector<std::string>& tokens() const { return tokens_; }
    [[nodiscard]] int size() const { return static_cast<int>(tokens_.size()); }

private:
    std::vector<std::string> tokens_;
    std::unordered_map<std::string, int> index_;
};

} // namespace gvqa
