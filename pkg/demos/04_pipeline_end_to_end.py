"""Run every pipeline stage on the bundled toy corpus and compare with one joint vocabulary.

Equivalent shell command: ``polyvocab run-all --workdir demo_work``.
"""

import json
import tempfile
from pathlib import Path

from polyvocab.analysis import fertility, relative_length_diff
from polyvocab.assembly import import_vocab
from polyvocab.cli import toy_config_path
from polyvocab.corpus import load_corpus
from polyvocab.pipeline import PipelineConfig, joint_baseline, run_all

cfg = PipelineConfig.load(toy_config_path())
work = Path(tempfile.mkdtemp(prefix="polyvocab_"))

for rec in run_all(cfg, work):
    print(f"{rec['stage']:>15}: {rec['status']}, {len(rec['outputs'])} files")

print((work / "clusters.tsv").read_text())
print((work / "allocation.tsv").read_text())
print(json.dumps(json.loads((work / "reports" / "summary.json").read_text()), indent=1))

# the clustered vocabulary against a single vocabulary of the same size;
# at this toy scale (800 tokens, floor 200) the joint vocabulary tends to win,
# the low-resource advantage shows up with the larger corpora of the acceptance suite
clustered = import_vocab(work / "final.vocab")
joint = joint_baseline(cfg, capacity=len(clustered))
for lang, path in sorted(cfg.eval_corpora.items()):
    held = load_corpus(cfg.resolve(path), lang)
    a = fertility(joint, held).avg_tokens_per_sentence
    b = fertility(clustered, held).avg_tokens_per_sentence
    print(f"{lang}: joint {a:.2f}, clustered {b:.2f} tokens/sentence "
          f"({relative_length_diff(joint, clustered, held):+.1f}%)")

# a second run is a no-op: inputs, config and seed are unchanged
print([r["status"] for r in run_all(cfg, work)])
