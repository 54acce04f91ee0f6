#include "doctest.h"

#include <random>

#include "crosstag/multisource.hpp"
#include "crosstag/synth.hpp"

using namespace crosstag;

namespace {

const TagSet& tagset() {
    static TagSet tags;
    return tags;
}

ProjectedSentence rendering(const std::string& language,
                            std::initializer_list<std::pair<const char*, int>> tokens) {
    ProjectedSentence s;
    s.source_language = language;
    s.pair_id = language + "-0";
    for (const auto& [form, tag] : tokens)
        s.tokens.tokens.emplace_back(form, tag);
    s.coverage = compute_coverage(s.tokens);
    s.avg_link_prob = 1.0;
    return s;
}

// Four renderings of one sentence sharing "que", as in mutually parallel
// translations from different systems.
RenderingGroup que_group() {
    const int sconj = tagset().index_of("SCONJ");
    const int pron = tagset().index_of("PRON");
    const int noun = tagset().index_of("NOUN");
    RenderingGroup g;
    g.group_id = "g0";
    g.source_languages = {"en", "de", "fr", "es"};
    g.renderings = {
        rendering("en", {{"que", sconj}, {"estudo", noun}}),
        rendering("de", {{"que", sconj}, {"pesquisa", noun}}),
        rendering("fr", {{"que", pron}, {"pesquisa", noun}}),
        rendering("es", {{"que", sconj}, {"estudo", noun}}),
    };
    return g;
}

}  // namespace

TEST_CASE("find_overlapping_words needs two distinct renderings") {
    auto g = que_group();
    auto overlap = find_overlapping_words(g);
    CHECK(overlap.count("que") == 1);
    CHECK(overlap.count("estudo") == 1);
    CHECK(overlap.count("pesquisa") == 1);

    SUBCASE("single rendering yields nothing") {
        RenderingGroup one;
        one.group_id = "g1";
        one.source_languages = {"en"};
        one.renderings = {rendering("en", {{"que", 0}})};
        CHECK(find_overlapping_words(one).empty());
    }
    SUBCASE("a form unique to one rendering is excluded") {
        g.renderings[0].tokens.tokens.emplace_back("unico", 0);
        auto o = find_overlapping_words(g);
        CHECK(o.count("unico") == 0);
    }
    SUBCASE("repeats within one rendering do not create overlap") {
        RenderingGroup two;
        two.group_id = "g2";
        two.source_languages = {"en", "de"};
        two.renderings = {rendering("en", {{"dup", 0}, {"dup", 0}}),
                          rendering("de", {{"other", 0}})};
        CHECK(find_overlapping_words(two).count("dup") == 0);
    }
}

TEST_CASE("vote counts every non-NULL occurrence") {
    const int sconj = tagset().index_of("SCONJ");
    const int pron = tagset().index_of("PRON");
    auto tally = vote(que_group(), tagset().size());
    REQUIRE(tally.count("que"));
    CHECK(tally["que"][static_cast<std::size_t>(sconj)] == 3);
    CHECK(tally["que"][static_cast<std::size_t>(pron)] == 1);

    SUBCASE("all-NULL forms have no tally entry") {
        RenderingGroup g;
        g.group_id = "g3";
        g.source_languages = {"en", "de"};
        g.renderings = {rendering("en", {{"x", kNullTag}}), rendering("de", {{"x", kNullTag}})};
        CHECK(vote(g, tagset().size()).count("x") == 0);
    }
    SUBCASE("single DET occurrence") {
        const int det = tagset().index_of("DET");
        RenderingGroup g;
        g.group_id = "g4";
        g.source_languages = {"en"};
        g.renderings = {rendering("en", {{"a", det}})};
        auto t = vote(g, tagset().size());
        CHECK(t["a"][static_cast<std::size_t>(det)] == 1);
    }
}

TEST_CASE("calibrate retags overlapping words by majority") {
    const int sconj = tagset().index_of("SCONJ");
    const int pron = tagset().index_of("PRON");
    const int det = tagset().index_of("DET");
    const int noun = tagset().index_of("NOUN");
    const int verb = tagset().index_of("VERB");

    SUBCASE("majority overrides the best rendering's tag") {
        auto g = que_group();
        auto out = calibrate(g, 2, tagset().size());  // fr said PRON, majority says SCONJ
        CHECK(out.tokens.tokens[0].tag == sconj);
    }
    SUBCASE("ties keep the best rendering's own tag") {
        RenderingGroup g;
        g.group_id = "g5";
        g.source_languages = {"a", "b", "c", "d"};
        g.renderings = {rendering("a", {{"w", noun}}), rendering("b", {{"w", noun}}),
                        rendering("c", {{"w", verb}}), rendering("d", {{"w", verb}})};
        CHECK(calibrate(g, 2, tagset().size()).tokens.tokens[0].tag == verb);
        CHECK(calibrate(g, 0, tagset().size()).tokens.tokens[0].tag == noun);
    }
    SUBCASE("the OOV-prone token follows the vote") {
        // best rendering tags "kas" DET; three other sources say PRON
        RenderingGroup g;
        g.group_id = "g6";
        g.source_languages = {"en", "de", "fr", "es"};
        g.renderings = {
            rendering("en", {{"Labai", kNullTag}, {"kas", det}}),
            rendering("de", {{"Labai", kNullTag}, {"kas", pron}}),
            rendering("fr", {{"kas", pron}}),
            rendering("es", {{"kas", pron}}),
        };
        auto out = calibrate(g, 0, tagset().size());
        CHECK(out.tokens.tokens[1].tag == pron);
    }
    SUBCASE("a NULL token whose form wins a vote becomes tagged") {
        RenderingGroup g;
        g.group_id = "g7";
        g.source_languages = {"a", "b"};
        g.renderings = {rendering("a", {{"w", kNullTag}}), rendering("b", {{"w", noun}})};
        auto out = calibrate(g, 0, tagset().size());
        CHECK(out.tokens.tokens[0].tag == noun);
        CHECK(out.coverage == 1.0);
    }
    SUBCASE("invalid rendering index is rejected") {
        auto g = que_group();
        CHECK_THROWS_AS(calibrate(g, 99, tagset().size()), ContractError);
    }
}

TEST_CASE("calibration properties") {
    SUBCASE("a single-rendering group calibrates to itself") {
        RenderingGroup g;
        g.group_id = "g8";
        g.source_languages = {"only"};
        g.renderings = {rendering("only", {{"a", 3}, {"b", kNullTag}})};
        auto out = calibrate(g, 0, tagset().size());
        CHECK(out.tokens.tokens[0].tag == 3);
        CHECK_FALSE(out.tokens.tokens[1].has_tag());
    }
    SUBCASE("coverage never decreases and reruns are identical") {
        SynthSpec spec;
        spec.seed = 9;
        spec.vocab_size = 30;
        spec.min_len = 40;
        spec.max_len = 60;
        auto sg = make_rendering_group(spec, 4, 0.3, tagset());
        const std::size_t best = 1;
        auto out1 = calibrate(sg.group, best, tagset().size());
        auto out2 = calibrate(sg.group, best, tagset().size());
        CHECK(out1.coverage >= sg.group.renderings[best].coverage);
        REQUIRE(out1.tokens.size() == out2.tokens.size());
        for (std::size_t t = 0; t < out1.tokens.size(); ++t)
            CHECK(out1.tokens.tokens[t].tag == out2.tokens.tokens[t].tag);
    }
    SUBCASE("scaling every tally count leaves the argmax unchanged") {
        // duplicating all renderings multiplies every vote count by 2
        auto g = que_group();
        auto baseline = calibrate(g, 2, tagset().size());
        RenderingGroup doubled = g;
        for (const auto& r : g.renderings) {
            doubled.renderings.push_back(r);
            doubled.source_languages.push_back(r.source_language + "2");
        }
        auto scaled = calibrate(doubled, 2, tagset().size());
        for (std::size_t t = 0; t < baseline.tokens.size(); ++t)
            CHECK(baseline.tokens.tokens[t].tag == scaled.tokens.tokens[t].tag);
    }
    SUBCASE("unanimous votes propagate to every occurrence") {
        const int aux = tagset().index_of("AUX");
        RenderingGroup g;
        g.group_id = "g9";
        g.source_languages = {"a", "b", "c"};
        g.renderings = {rendering("a", {{"w", aux}, {"w", kNullTag}}),
                        rendering("b", {{"w", aux}}), rendering("c", {{"w", aux}})};
        auto out = calibrate(g, 0, tagset().size());
        for (const auto& tok : out.tokens.tokens)
            CHECK(tok.tag == aux);
    }
}

TEST_CASE("select_best_rendering maximizes the corpus-level proxy") {
    RenderingGroup g;
    g.group_id = "g10";
    g.source_languages = {"en", "de"};
    g.renderings = {rendering("en", {{"a", 0}}), rendering("de", {{"b", 0}})};

    SUBCASE("coverage times link probability wins") {
        CorpusStats stats;
        stats["en"] = {0.8, 0.7};  // 0.56
        stats["de"] = {0.9, 0.5};  // 0.45
        CHECK(select_best_rendering(g, stats) == 0);
        stats["de"] = {0.9, 0.7};  // 0.63
        CHECK(select_best_rendering(g, stats) == 1);
    }
    SUBCASE("single source is index 0") {
        RenderingGroup one;
        one.source_languages = {"en"};
        one.renderings = {rendering("en", {{"a", 0}})};
        CorpusStats stats;
        stats["en"] = {0.5, 0.5};
        CHECK(select_best_rendering(one, stats) == 0);
    }
    SUBCASE("exact ties pick the smaller index") {
        CorpusStats stats;
        stats["en"] = {0.8, 0.7};
        stats["de"] = {0.7, 0.8};
        CHECK(select_best_rendering(g, stats) == 0);
    }
    SUBCASE("missing stats are an error") {
        CorpusStats stats;
        stats["en"] = {0.8, 0.7};
        CHECK_THROWS_AS(select_best_rendering(g, stats), ContractError);
    }
}

TEST_CASE("group manifest round-trips") {
    std::vector<GroupRef> groups;
    groups.push_back({"g000000", {{"proj_L0.conllu", 1}, {"proj_L1.conllu", 1}}});
    groups.push_back({"g000001", {{"proj_L0.conllu", 2}, {"proj_L1.conllu", 2}}});
    const std::string text = write_group_manifest(groups);
    auto parsed = parse_group_manifest(text);
    REQUIRE(parsed.size() == 2);
    CHECK(parsed[0].group_id == "g000000");
    CHECK(parsed[1].renderings[1].path == "proj_L1.conllu");
    CHECK(parsed[1].renderings[1].line == 2);

    CHECK_THROWS_AS(parse_group_manifest("g0\tno-colon-here\n"), ParseError);
    CHECK_THROWS_AS(parse_group_manifest("g0\tfile:0\n"), ParseError);
}
