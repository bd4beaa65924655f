from polyvocab.corpus import META
from polyvocab.synthetic import DENSE, GEORGIAN, three_script_corpora, write_toy_dataset, zipf_corpus


def test_corpora_are_seeded():
    assert zipf_corpus("z", 20, 50, seed=3) == zipf_corpus("z", 20, 50, seed=3)
    assert zipf_corpus("z", 20, 50, seed=3) != zipf_corpus("z", 20, 50, seed=4)


def test_shared_lexicon_seed_gives_same_words():
    a = zipf_corpus("z", 300, 20, seed=1, lexicon_seed=0)
    b = zipf_corpus("z", 300, 20, seed=2, lexicon_seed=0)
    words = lambda c: {w for s in c.sentences for w in s.split(META)}
    assert words(a) == words(b)


def test_three_scripts_are_disjoint():
    c = three_script_corpora(0, (50, 40, 30))
    chars = {k: set("".join(v.sentences)) - {META} for k, v in c.items()}
    assert chars["dns"] <= set(DENSE) and chars["agg"] <= set(GEORGIAN)
    assert not chars["lat"] & chars["dns"] and not chars["lat"] & chars["agg"]
    assert [c[k].line_count for k in ("lat", "dns", "agg")] == [50, 40, 30]
    assert not any(META in s for s in c["dns"].sentences)


def test_toy_dataset_files(tmp_path):
    cfg = write_toy_dataset(tmp_path, lines=(10, 10, 10), eval_lines=(5, 5, 5), k=3)
    names = sorted(p.name for p in tmp_path.iterdir())
    assert "config.json" in names and "agg.eval.txt" in names
    assert '"k": 3' in cfg.read_text()
