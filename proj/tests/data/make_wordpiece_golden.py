"""Regenerates wordpiece_golden.jsonl with the HuggingFace BERT tokenizer.

Run once by hand; the output is frozen and checked by the unit tests.
    python3 make_wordpiece_golden.py
"""
import json
import pathlib

from transformers import BertTokenizer

here = pathlib.Path(__file__).parent
tok = BertTokenizer(str(here / "vocab.txt"), do_lower_case=True, tokenize_chinese_chars=False)
with open(here / "wordpiece_golden.jsonl", "w", encoding="utf-8") as out:
    for line in (here / "tokenize_sentences.txt").read_text(encoding="utf-8").splitlines():
        backend = tok.backend_tokenizer
        normalized = backend.normalizer.normalize_str(line)
        words = [w for w, _ in backend.pre_tokenizer.pre_tokenize_str(normalized)]
        pieces = tok.tokenize(line)
        out.write(json.dumps({"text": line, "words": words, "pieces": pieces}, ensure_ascii=False) + "\n")
