#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "crosstag/types.hpp"

namespace crosstag {

// Dense form -> index map with reserved PAD (0) and UNK (1) slots.
// Real forms are assigned indices by descending frequency, ties broken
// lexicographically, so the mapping is reproducible across runs.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnk = 1;
    static constexpr int kNumReserved = 2;

    Vocabulary();

    // kUnk when the form is absent.
    int lookup(const std::string& form) const;
    bool contains(const std::string& form) const;

    int size() const { return static_cast<int>(forms_.size()); }
    const std::string& form(int index) const;
    std::uint64_t count(int index) const;

    void add_entry(const std::string& form, std::uint64_t count);

    std::string serialize() const;  // "form<TAB>index<TAB>count" per line
    static Vocabulary deserialize(std::string_view text);

private:
    std::vector<std::string> forms_;
    std::vector<std::uint64_t> counts_;
    std::unordered_map<std::string, int> index_;
};

Vocabulary build_vocabulary(const std::vector<TaggedSentence>& sentences,
                            std::uint64_t min_count);
Vocabulary build_vocabulary_from_counts(const std::map<std::string, std::uint64_t>& counts,
                                        std::uint64_t min_count);

std::vector<TaggedSentence> parse_conllu(std::istream& in, const TagSet& tags);
std::vector<TaggedSentence> parse_conllu_text(std::string_view text, const TagSet& tags);

struct PlainParseResult {
    std::vector<TaggedSentence> sentences;
    std::size_t blank_lines = 0;  // skipped, reported as a warning tally
};

PlainParseResult parse_plain(std::istream& in);
PlainParseResult parse_plain_text(std::string_view text);

void write_conllu(std::ostream& out, const std::vector<TaggedSentence>& sentences,
                  const TagSet& tags);
std::string write_conllu_text(const std::vector<TaggedSentence>& sentences,
                              const TagSet& tags);

}  // namespace crosstag
