#include "crosstag/types.hpp"

namespace crosstag {

namespace {

const std::vector<std::string>& upos_tags() {
    static const std::vector<std::string> tags = {
        "ADJ", "ADP", "ADV",  "AUX",   "CCONJ", "DET",   "INTJ", "NOUN", "NUM",
        "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM", "VERB", "X"};
    return tags;
}

}  // namespace

const std::string& TagSet::null_marker() {
    static const std::string marker = "NULL";
    return marker;
}

TagSet::TagSet() : TagSet(upos_tags()) {}

TagSet::TagSet(std::vector<std::string> tags) : tags_(std::move(tags)) {
    index_.reserve(tags_.size());
    for (std::size_t i = 0; i < tags_.size(); ++i) {
        const std::string& t = tags_[i];
        if (t.empty())
            throw ContractError("tag set contains an empty symbol");
        if (t == null_marker())
            throw ContractError("tag set must not contain the reserved NULL marker");
        if (!index_.emplace(t, static_cast<TagId>(i)).second)
            throw ContractError("duplicate tag symbol: " + t);
    }
}

const std::string& TagSet::symbol(TagId id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= tags_.size())
        throw ContractError("tag index out of range: " + std::to_string(id));
    return tags_[static_cast<std::size_t>(id)];
}

TagId TagSet::find(const std::string& symbol) const {
    auto it = index_.find(symbol);
    return it == index_.end() ? -1 : it->second;
}

TagId TagSet::index_of(const std::string& symbol) const {
    TagId id = find(symbol);
    if (id < 0)
        throw ContractError("unknown tag symbol: " + symbol);
    return id;
}

}  // namespace crosstag
