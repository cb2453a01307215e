#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "dq/table.hpp"

namespace dq {

/// Word list backing the readability metric and pattern. Stored lowercase.
class Lexicon {
public:
    static Lexicon bundled();

    void add_word(std::string_view word);
    void add_words(const std::vector<std::string>& words);

    /// Adds tokens occurring at least `min_count` times across the column's
    /// text cells; such tokens are treated as valid in-domain vocabulary.
    void add_column_frequent(const Column& column, std::size_t min_count = 5);

    bool contains(std::string_view token) const;
    bool empty() const { return words_.empty(); }
    std::size_t size() const { return words_.size(); }

    /// True when every alphabetic token of the value is a known word.
    /// Tokens carrying digits are not spell-checked.
    bool readable(std::string_view value) const;

    const std::set<std::string>& words() const { return words_; }

private:
    std::set<std::string> words_;
};

}  // namespace dq
