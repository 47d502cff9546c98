#pragma once

#include <string>
#include <vector>

namespace styletuner {

// A style identifier expanded into n freshly allocated vocabulary slots. The
// ids are contiguous and appended past the original vocabulary, so they can
// never shadow a pre-existing token.
struct StyleIdentifierSpan {
    std::string placeholder;               // e.g. "[V*]"
    std::vector<std::string> token_names;  // "V1*", "V2*", ...
    std::vector<int> token_ids;
    int n = 0;

    bool valid() const {
        return n > 0 && token_names.size() == static_cast<std::size_t>(n) &&
               token_ids.size() == static_cast<std::size_t>(n);
    }
};

}  // namespace styletuner
