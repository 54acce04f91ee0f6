"""End-to-end smoke tests for the python bindings."""

import math

import pytest

import crosstag as ct


@pytest.fixture(scope="module")
def tags():
    return ct.TagSet()


def make_pair(pair_id, src, tgt, tags):
    pair = ct.ParallelPair()
    pair.pair_id = pair_id
    source = ct.TaggedSentence()
    source.tokens = [ct.Token(form, tags.index_of("NOUN")) for form in src]
    target = ct.TaggedSentence()
    target.tokens = [ct.Token(form) for form in tgt]
    pair.source = source
    pair.target = target
    return pair


def test_tagset_and_conllu_roundtrip(tags):
    assert len(tags) == 17
    assert tags.symbol(tags.index_of("NOUN")) == "NOUN"

    text = "1\tFomos\t_\tVERB\t_\t_\t_\t_\t_\t_\n2\tinformados\t_\tVERB\t_\t_\t_\t_\t_\t_\n\n"
    sentences = ct.parse_conllu(text, tags)
    assert len(sentences) == 1
    assert [t.form for t in sentences[0].tokens] == ["Fomos", "informados"]
    rewritten = ct.write_conllu(sentences, tags)
    assert ct.parse_conllu(rewritten, tags)[0].tokens[0].form == "Fomos"

    with pytest.raises(ValueError):
        ct.parse_conllu("1\tkas\t_\tBOGUS\t_\t_\t_\t_\t_\t_\n", tags)


def test_em_alignment_and_filtering(tags):
    pairs = [
        make_pair("p0", ["a", "b"], ["x", "y"], tags),
        make_pair("p1", ["a"], ["x"], tags),
    ]
    options = ct.AlignerOptions()
    options.iterations = 10
    model = ct.train_ibm1(pairs, options)
    assert model.table.prob("a", "x") > 0.9
    ll = model.log_likelihood
    assert all(b >= a - 1e-9 for a, b in zip(ll, ll[1:]))

    alignment = ct.posterior_align(model, pairs[0])
    assert [(l.src, l.tgt) for l in alignment.links] == [(0, 0), (1, 1)]

    kept = ct.filter_links(alignment, 0.1)
    assert len(kept.links) <= len(alignment.links)


def test_projection_and_type_constraints(tags):
    pair = make_pair("p0", ["casa"], ["house"], tags)
    alignment = ct.Alignment()
    alignment.pair_id = "p0"
    alignment.links = [ct.AlignmentLink(0, 0, 0.9)]
    projected = ct.project_tokens(pair, alignment)
    assert projected.coverage == 1.0
    assert projected.tokens.tokens[0].tag == tags.index_of("NOUN")

    dictionary = ct.build_type_dictionary([projected], 0.2, len(tags))
    constrained = ct.apply_type_constraints(projected, dictionary)
    assert constrained.tokens.tokens[0].tag == tags.index_of("NOUN")


def test_voting_calibration(tags):
    spec = ct.SynthSpec()
    spec.seed = 11
    spec.vocab_size = 50
    spec.min_len = 500
    spec.max_len = 500
    group = ct.make_rendering_group(spec, 5, 0.2, tags)
    calibrated = ct.calibrate(group.group, 0, len(tags))
    gold = group.gold.tokens
    errors = sum(
        1 for t, g in zip(calibrated.tokens.tokens, gold) if t.tag != g.tag
    )
    single_errors = sum(
        1
        for t, g in zip(group.group.renderings[0].tokens.tokens, gold)
        if t.tag != g.tag
    )
    assert errors < single_errors


def test_tagger_training_and_gradients(tags):
    spec = ct.SynthSpec()
    spec.seed = 21
    spec.vocab_size = 30
    spec.num_sentences = 150
    spec.min_len = 3
    spec.max_len = 6
    corpus = ct.generate(spec, tags)

    config = ct.TaggerConfig()
    config.word_embedding_size = 12
    config.affix_embedding_size = 12
    config.hidden_nodes = 16
    config.dropout_rate = 0.1
    config.learning_rate = 5e-3
    config.decay_rate = 0.02
    config.epochs = 10
    config.seed = 3

    model, history = ct.train_tagger(list(corpus.gold_target_tags), config)
    assert len(history.epoch_loss) == 10
    assert history.epoch_loss[-1] < history.epoch_loss[0]

    predictions = ct.predict_corpus(model, list(corpus.gold_target_tags))
    report = ct.score(predictions, list(corpus.gold_target_tags), tags)
    assert report.token_accuracy > 0.9

    blob = model.serialize()
    reloaded = ct.TaggerModel.deserialize(blob)
    again = ct.predict_corpus(reloaded, list(corpus.gold_target_tags))
    assert all(
        a.tokens[i].tag == b.tokens[i].tag
        for a, b in zip(predictions, again)
        for i in range(len(a.tokens))
    )

    err = ct.gradient_check(model, corpus.gold_target_tags[0], 1e-5)
    assert err < 1e-4


def test_evaluator(tags):
    r = ct.pearson([1.0, 2.0, 3.0], [3.0, 2.0, 1.0])
    assert r.r == -1.0
    with pytest.raises(RuntimeError):
        ct.pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    assert math.isclose(
        ct.pearson([1, 2, 3, 4, 5, 6], [2, 1, 4, 3, 6, 5]).r, 0.8285714285714286
    )


def test_pipeline_commands(tags, tmp_path):
    data = tmp_path / "data"
    out = tmp_path / "out"
    config = ct.RunConfig()
    config.set("seed", "5")
    config.set("synth.vocab_size", "30")
    config.set("synth.num_sentences", "60")
    config.set("synth.min_len", "3")
    config.set("synth.max_len", "6")
    config.set("synth.num_sources", "2")
    config.set("synth.test_sentences", "10")
    config.set("synth.out_dir", str(data))
    config.set("projector.min_coverage", "0")
    config.set("tagger.word_embedding_size", "12")
    config.set("tagger.affix_embedding_size", "12")
    config.set("tagger.hidden_nodes", "16")
    config.set("tagger.dropout_rate", "0.1")
    config.set("tagger.learning_rate", "0.005")
    config.set("tagger.decay_rate", "0.02")
    config.set("tagger.epochs", "30")
    config.set("pipeline.data_dir", str(data))
    config.set("pipeline.out_dir", str(out))
    config.validate()

    ct.cmd_synth(config)
    assert (data / "languages.txt").exists()
    report = ct.cmd_pipeline(config)
    assert report.token_count > 0
    assert report.token_accuracy > 0.9
    assert (out / "model.json").exists()
    assert (out / "report.tsv").exists()

    with pytest.raises(ValueError):
        config.set("bogus.key", "1")
