#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace crosstag {

// Error taxonomy. The CLI maps these onto process exit codes
// (config -> 2, I/O and malformed input -> 3, stage contract -> 4).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, std::size_t line_number)
        : std::runtime_error(msg + " (line " + std::to_string(line_number) + ")"),
          line(line_number) {}
    std::size_t line;
};

struct ContractError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Index into a TagSet. kNullTag marks a token that carries no tag.
using TagId = int;
inline constexpr TagId kNullTag = -1;

// Ordered tag inventory. Defaults to the 17 Universal Dependencies UPOS
// tags. The NULL marker is reserved and never a member of the inventory.
class TagSet {
public:
    TagSet();
    explicit TagSet(std::vector<std::string> tags);

    static const std::string& null_marker();

    std::size_t size() const { return tags_.size(); }
    const std::string& symbol(TagId id) const;

    // -1 if the symbol is unknown (the NULL marker is unknown by design).
    TagId find(const std::string& symbol) const;

    // Throws ContractError naming the symbol if unknown.
    TagId index_of(const std::string& symbol) const;

    const std::vector<std::string>& symbols() const { return tags_; }

private:
    std::vector<std::string> tags_;
    std::unordered_map<std::string, TagId> index_;
};

struct Token {
    std::string form;      // non-empty, no internal whitespace
    TagId tag = kNullTag;

    Token() = default;
    Token(std::string f, TagId t = kNullTag) : form(std::move(f)), tag(t) {}

    bool has_tag() const { return tag != kNullTag; }
};

struct TaggedSentence {
    std::vector<Token> tokens;

    std::size_t size() const { return tokens.size(); }
    bool empty() const { return tokens.empty(); }
};

struct ParallelPair {
    std::string pair_id;
    TaggedSentence source;  // fully tagged
    TaggedSentence target;  // tags absent on input
};

}  // namespace crosstag
