#include "styletuner/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace styletuner {

namespace {

// Frozen vocabulary. Order defines token ids; do not reorder.
const char* kBaseWords[] = {
    // prompt scaffolding
    "a", "an", "the", "of", "with", "photo", "style", "plain", "image", "picture",
    // object nouns used by the synthetic corpus
    "car", "apple", "tree", "house", "boat", "fish", "bird", "cup", "chair", "lamp",
    "dog", "cat", "vase", "clock", "hat", "shoe", "bottle", "plane", "train", "flower",
    // style descriptors used by the offline keyword table
    "geometric", "reliefs", "ink", "wash", "woven", "texture", "stained", "glass",
    "pastel", "gradients", "crosshatch", "shading", "marble", "veining", "mosaic",
    "tiles", "brushed", "metal", "halftone", "dots", "origami", "folds", "rustic",
    "grain",
};

}  // namespace

FixtureTokenizer::FixtureTokenizer() {
    for (const char* w : kBaseWords) pieces_.emplace_back(w);
    for (char c = 'a'; c <= 'z'; ++c) {
        std::string s(1, c);
        if (std::find(pieces_.begin(), pieces_.end(), s) == pieces_.end()) pieces_.push_back(s);
    }
    for (char c = 'a'; c <= 'z'; ++c) pieces_.push_back(std::string("##") + c);
}

const std::string& FixtureTokenizer::piece_text(int id) const {
    if (id < 0 || id >= vocab_size()) throw std::out_of_range("piece_text: id out of range");
    return pieces_[static_cast<std::size_t>(id)];
}

std::optional<int> FixtureTokenizer::piece_id(const std::string& piece) const {
    const auto it = std::find(pieces_.begin(), pieces_.end(), piece);
    if (it == pieces_.end()) return std::nullopt;
    return static_cast<int>(it - pieces_.begin());
}

std::vector<int> FixtureTokenizer::tokenize(const std::string& text) const {
    std::vector<int> ids;
    std::string word;
    auto flush_word = [&]() {
        std::size_t pos = 0;
        while (pos < word.size()) {
            // Longest prefix in the vocabulary; single letters guarantee progress.
            std::size_t best_len = 0;
            int best_id = -1;
            for (std::size_t len = word.size() - pos; len >= 1; --len) {
                std::string candidate = word.substr(pos, len);
                if (pos > 0) candidate = "##" + candidate;
                if (auto id = piece_id(candidate)) {
                    best_len = len;
                    best_id = *id;
                    break;
                }
            }
            ids.push_back(best_id);
            pos += best_len;
        }
        word.clear();
    };
    for (char ch : text) {
        if (std::isalpha(static_cast<unsigned char>(ch))) {
            word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
        } else if (!word.empty()) {
            flush_word();
        }
    }
    if (!word.empty()) flush_word();
    return ids;
}

}  // namespace styletuner
