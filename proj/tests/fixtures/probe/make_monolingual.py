"""Regenerates monolingual.jsonl: 100 single-language texts built from the
held-out sentences. Some use tabs or a single "Name:" prefix, to exercise
near misses of the pair rules."""
import json
import random
import sys
from pathlib import Path

root = Path(__file__).resolve().parents[3]
rng = random.Random(20240)
names = {"en": "English", "fr": "Français", "de": "Deutsch", "es": "Español"}
out = []
for lang in ["en", "fr", "de", "es"]:
    sents = (root / "data/langid/heldout" / f"{lang}.txt").read_text(encoding="utf-8").split("\n")
    sents = [s for s in sents if s.strip()]
    for k in range(25):
        lines = []
        for _ in range(rng.randint(1, 4)):
            i = rng.randrange(len(sents) - 3)
            lines.append(" ".join(sents[i:i + rng.randint(1, 3)]))
        style = k % 5
        if style == 1 and len(lines) >= 1:
            a, b = rng.sample(sents, 2)
            lines[0] = a + "\t" + b
        elif style == 2:
            lines[0] = names[lang] + ": " + lines[0]
        elif style == 3:
            lines = ["\n".join(lines)]
            lines[0] = lines[0].replace("\n", "\n\n")
        out.append({"lang": lang, "text": "\n".join(lines)})
with open(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).with_name("monolingual.jsonl"), "w", encoding="utf-8") as f:
    for o in out:
        f.write(json.dumps(o, ensure_ascii=False) + "\n")
