#pragma once

#include <optional>
#include <string>
#include <vector>

namespace styletuner {

// Word-piece tokenizer with a frozen built-in vocabulary: common prompt words
// plus single-letter pieces, so any alphabetic word tokenizes (unknown words
// fall back to letter pieces). Deterministic by construction; real backbones
// supply their own tokenizer behind the same surface.
class FixtureTokenizer {
public:
    FixtureTokenizer();

    // Lowercases, splits on non-letters, then greedy longest-match word-piece
    // segmentation. Returns an empty sequence when the text holds no letters.
    std::vector<int> tokenize(const std::string& text) const;

    int vocab_size() const { return static_cast<int>(pieces_.size()); }
    const std::string& piece_text(int id) const;
    std::optional<int> piece_id(const std::string& piece) const;

private:
    std::vector<std::string> pieces_;
};

}  // namespace styletuner
