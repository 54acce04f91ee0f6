#include "crosstag/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <istream>
#include <ostream>
#include <sstream>

#include "crosstag/io_util.hpp"

namespace crosstag {

namespace {

const char* kPadForm = "<PAD>";
const char* kUnkForm = "<UNK>";

bool has_whitespace(const std::string& s) {
    for (unsigned char c : s)
        if (std::isspace(c)) return true;
    return false;
}

void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
}

}  // namespace

Vocabulary::Vocabulary() {
    // Reserved slots are addressed by index; their display names are
    // cosmetic and never consulted by lookup().
    forms_ = {kPadForm, kUnkForm};
    counts_ = {0, 0};
}

int Vocabulary::lookup(const std::string& form) const {
    auto it = index_.find(form);
    return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(const std::string& form) const {
    return index_.find(form) != index_.end();
}

const std::string& Vocabulary::form(int index) const {
    if (index < 0 || index >= size())
        throw ContractError("vocabulary index out of range: " + std::to_string(index));
    return forms_[static_cast<std::size_t>(index)];
}

std::uint64_t Vocabulary::count(int index) const {
    if (index < 0 || index >= size())
        throw ContractError("vocabulary index out of range: " + std::to_string(index));
    return counts_[static_cast<std::size_t>(index)];
}

void Vocabulary::add_entry(const std::string& form, std::uint64_t count) {
    int idx = size();
    if (!index_.emplace(form, idx).second)
        throw ContractError("duplicate vocabulary form: " + form);
    forms_.push_back(form);
    counts_.push_back(count);
}

std::string Vocabulary::serialize() const {
    std::ostringstream out;
    for (int i = 0; i < size(); ++i)
        out << forms_[static_cast<std::size_t>(i)] << '\t' << i << '\t'
            << counts_[static_cast<std::size_t>(i)] << '\n';
    return out.str();
}

Vocabulary Vocabulary::deserialize(std::string_view text) {
    Vocabulary vocab;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) continue;
        auto fields = split(line, '\t');
        if (fields.size() != 3)
            throw ParseError("vocabulary line must have 3 tab-separated fields", line_no);
        int idx = static_cast<int>(parse_long(fields[1]));
        auto count = static_cast<std::uint64_t>(parse_long(fields[2]));
        if (idx < kNumReserved) {
            if (idx != 0 && idx != 1)
                throw ParseError("bad reserved vocabulary index", line_no);
            continue;  // reserved rows carry no information
        }
        if (idx != vocab.size())
            throw ParseError("vocabulary indices must be dense and ordered", line_no);
        vocab.add_entry(fields[0], count);
    }
    return vocab;
}

Vocabulary build_vocabulary(const std::vector<TaggedSentence>& sentences,
                            std::uint64_t min_count) {
    std::map<std::string, std::uint64_t> counts;
    for (const auto& s : sentences)
        for (const auto& tok : s.tokens)
            ++counts[tok.form];
    return build_vocabulary_from_counts(counts, min_count);
}

Vocabulary build_vocabulary_from_counts(const std::map<std::string, std::uint64_t>& counts,
                                        std::uint64_t min_count) {
    if (min_count < 1)
        throw ContractError("min_count must be >= 1");
    std::vector<std::pair<std::string, std::uint64_t>> kept;
    kept.reserve(counts.size());
    for (const auto& [form, count] : counts)
        if (count >= min_count)
            kept.emplace_back(form, count);
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    Vocabulary vocab;
    for (const auto& [form, count] : kept)
        vocab.add_entry(form, count);
    return vocab;
}

std::vector<TaggedSentence> parse_conllu(std::istream& in, const TagSet& tags) {
    std::vector<TaggedSentence> sentences;
    TaggedSentence current;
    std::string line;
    std::size_t line_no = 0;
    auto flush = [&]() {
        if (!current.empty()) {
            sentences.push_back(std::move(current));
            current = TaggedSentence{};
        }
    };
    while (std::getline(in, line)) {
        ++line_no;
        strip_cr(line);
        if (line.empty()) {
            flush();
            continue;
        }
        if (line[0] == '#')
            continue;
        auto fields = split(line, '\t');
        if (fields.size() != 10)
            throw ParseError("expected 10 tab-separated columns, got " +
                                 std::to_string(fields.size()),
                             line_no);
        const std::string& id = fields[0];
        // Multiword-token ranges and empty nodes are not syntactic words.
        if (id.find('-') != std::string::npos || id.find('.') != std::string::npos)
            continue;
        const std::string& form = fields[1];
        if (form.empty())
            throw ParseError("empty FORM column", line_no);
        if (has_whitespace(form))
            throw ParseError("FORM contains whitespace: '" + form + "'", line_no);
        const std::string& upos = fields[3];
        TagId tag = kNullTag;
        if (upos != "_") {
            tag = tags.find(upos);
            if (tag < 0)
                throw ParseError("unknown UPOS symbol: " + upos, line_no);
        }
        current.tokens.emplace_back(form, tag);
    }
    flush();
    return sentences;
}

std::vector<TaggedSentence> parse_conllu_text(std::string_view text, const TagSet& tags) {
    std::istringstream in{std::string(text)};
    return parse_conllu(in, tags);
}

PlainParseResult parse_plain(std::istream& in) {
    PlainParseResult result;
    std::string line;
    while (std::getline(in, line)) {
        strip_cr(line);
        auto forms = split_ws(line);
        if (forms.empty()) {
            ++result.blank_lines;
            continue;
        }
        TaggedSentence s;
        s.tokens.reserve(forms.size());
        for (auto& f : forms)
            s.tokens.emplace_back(std::move(f));
        result.sentences.push_back(std::move(s));
    }
    return result;
}

PlainParseResult parse_plain_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_plain(in);
}

void write_conllu(std::ostream& out, const std::vector<TaggedSentence>& sentences,
                  const TagSet& tags) {
    for (const auto& s : sentences) {
        for (std::size_t i = 0; i < s.tokens.size(); ++i) {
            const Token& tok = s.tokens[i];
            const std::string& upos = tok.has_tag() ? tags.symbol(tok.tag) : "_";
            out << (i + 1) << '\t' << tok.form << "\t_\t" << upos
                << "\t_\t_\t_\t_\t_\t_\n";
        }
        out << '\n';
    }
}

std::string write_conllu_text(const std::vector<TaggedSentence>& sentences,
                              const TagSet& tags) {
    std::ostringstream out;
    write_conllu(out, sentences, tags);
    return out.str();
}

}  // namespace crosstag
