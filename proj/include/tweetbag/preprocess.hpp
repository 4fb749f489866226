#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tweetbag/corpus.hpp"

namespace tweetbag {

/// Tweet cleaning, applied in this order:
///   1. drop every non-ASCII code point (anything outside U+0000..U+007F);
///   2. turn '\n', '\t' and '\r' into spaces;
///   3. delete "HTTPURL" and "@USER" (case-sensitive), repeated until neither
///      substring remains, since a deletion can splice a new occurrence;
///   4. collapse whitespace runs to one space and trim both ends.
/// Total and idempotent. In UTF-8 a code point is non-ASCII exactly when its
/// bytes are >= 0x80, so step 1 works bytewise; stray invalid bytes go too.
std::string clean(std::string_view text);

struct CleanReport {
    std::vector<Tweet> tweets;
    std::size_t emptied = 0;  // records whose cleaned text is empty
};

// Cleans every text; ids, labels, order and cardinality are preserved.
CleanReport clean_corpus(std::span<const Tweet> tweets);

}  // namespace tweetbag
