#include "dq/lexicon.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "dq/text.hpp"

namespace dq {

namespace {

// Compact general-purpose list; per-column frequent tokens supply the
// domain vocabulary on real data.
const char* const kBundledWords[] = {
    "about", "after", "again", "all", "also", "and", "any", "avenue", "back", "bad", "be",
    "because", "been", "before", "best", "between", "big", "boulevard", "but", "by", "can",
    "city", "come", "could", "country", "day", "do", "down", "drive", "each", "east", "end",
    "even", "every", "few", "first", "for", "from", "get", "give", "go", "good", "great",
    "had", "has", "have", "he", "her", "here", "him", "his", "home", "house", "how", "if",
    "in", "into", "is", "it", "its", "just", "know", "lane", "large", "last", "left", "life",
    "like", "little", "long", "look", "made", "make", "man", "many", "may", "me", "men",
    "might", "montreal", "more", "morning", "most", "much", "must", "my", "never", "new",
    "night", "no", "north", "not", "now", "of", "off", "old", "on", "one", "only", "or",
    "other", "our", "out", "over", "own", "people", "place", "right", "road", "said", "same",
    "see", "she", "should", "small", "so", "some", "south", "station", "still", "street",
    "such", "take", "than", "that", "the", "their", "them", "then", "there", "these", "they",
    "thing", "think", "this", "those", "three", "through", "time", "to", "too", "two",
    "under", "up", "us", "use", "very", "want", "way", "we", "well", "west", "what", "when",
    "where", "which", "while", "who", "will", "with", "work", "world", "would", "year",
    "you", "your",
};

bool alphabetic(std::string_view tok) {
    return !tok.empty() && std::all_of(tok.begin(), tok.end(), [](unsigned char c) {
        return std::isalpha(c) != 0;
    });
}

}  // namespace

Lexicon Lexicon::bundled() {
    Lexicon lex;
    for (const char* w : kBundledWords) lex.words_.insert(w);
    return lex;
}

void Lexicon::add_word(std::string_view word) {
    if (!word.empty()) words_.insert(text::lowercase(word));
}

void Lexicon::add_words(const std::vector<std::string>& words) {
    for (const auto& w : words) add_word(w);
}

void Lexicon::add_column_frequent(const Column& column, std::size_t min_count) {
    std::map<std::string, std::size_t> counts;
    for (const auto& cell : column.cells) {
        if (cell.tag != Cell::Tag::Text) continue;
        for (const auto& tok : text::tokens(cell.text)) {
            if (alphabetic(tok)) ++counts[text::lowercase(tok)];
        }
    }
    for (const auto& [tok, n] : counts)
        if (n >= min_count) words_.insert(tok);
}

bool Lexicon::contains(std::string_view token) const {
    return words_.count(text::lowercase(token)) > 0;
}

bool Lexicon::readable(std::string_view value) const {
    for (const auto& tok : text::tokens(value)) {
        if (!alphabetic(tok)) continue;
        if (!contains(tok)) return false;
    }
    return true;
}

}  // namespace dq
