#!/usr/bin/env python3
"""Brute-force recomputation of confusion counts, record by record.

Shares no code with the C++ evaluator. Reads either stored outcomes or a
zero-shot replay tape (raw completions keyed by prompt) and prints counts as
JSON, or compares them against an expected file with --expect.
"""
import argparse
import json
import re
import sys

SPACE = " \t\n\r"
EDGE = set(".,;:!?'\"()[]`")


def term_pattern(q):
    body = "(?:[^{q}]|{q}{q}|{q}(?!{q}|[{s}]*[,)]))*".format(q=q, s=SPACE)
    return "{q}({b}){q}(?=[{s}]*[,)])".format(q=q, b=body, s=SPACE)


TERM = "(?:{}|{})".format(term_pattern("'"), term_pattern('"'))
SEP = "[{}]*".format(SPACE)
TUPLE = re.compile(r"\(" + SEP + TERM + SEP + "(?:," + SEP + TERM + SEP + "){2,3}\\)", re.S)
ONE_TERM = re.compile(TERM, re.S)


def unquote(term):
    q = term[0]
    return term[1:-1].replace(q + q, q)


def first_tuple(text):
    for start in [i for i, c in enumerate(text) if c == "("]:
        m = TUPLE.match(text, start)
        if not m:
            continue
        terms = [unquote(t.group(0)) for t in ONE_TERM.finditer(m.group(0))]
        if all(t.strip(SPACE) for t in terms):
            return terms
    return None


def lower(s):
    return "".join(chr(ord(c) + 32) if "A" <= c <= "Z" else c for c in s)


def tokens(text):
    out = []
    for raw in re.split("[ \t\n\r\v\f]+", lower(text)):
        tok = raw
        while tok and tok[0] in EDGE:
            tok = tok[1:]
        while tok and tok[-1] in EDGE:
            tok = tok[:-1]
        if not tok:
            continue
        if len(tok) >= 3 and tok[-2:] in ("st", "nd", "rd", "th") and all("0" <= c <= "9" for c in tok[:-2]):
            tok = tok[:-2]
        out.append(tok)
    return out


def window(hay, needle):
    return any(hay[i:i + len(needle)] == needle for i in range(len(hay) - len(needle) + 1))


def included(a, b):
    ta, tb = tokens(a), tokens(b)
    if not ta or not tb:
        return not ta and not tb
    return window(ta, tb) or window(tb, ta)


class Vocab:
    def __init__(self, path):
        self.names = [json.loads(l)["name"] for l in open(path, encoding="utf-8") if l.strip()]

    def canonical(self, name):
        key = lower(name.strip(SPACE))
        for n in self.names:
            if lower(n) == key:
                return n
        return None


def triple_from_completion(text, vocab):
    """(subject, predicate, object) or None when no triple is extracted."""
    terms = first_tuple(text)
    if terms is None:
        return None  # OutOfContext or Unparseable: both score as FN
    if len(terms) == 4:
        rel = vocab.canonical(terms[3])
        if rel is None:
            return None
        return terms[0], rel, terms[2]
    return tuple(terms[:3])


def verdicts(triple, gold, vocab):
    gold_rel = vocab.canonical(gold["relation"])
    if gold_rel is None:
        raise SystemExit("gold relation not in vocabulary: " + gold["id"])
    if triple is None:
        return ("FN", gold_rel), ("FN", gold_rel)
    pred = vocab.canonical(triple[1])
    if pred is None:
        return ("FN", gold_rel), ("FN", gold_rel)
    if pred != gold_rel:
        return ("FP", pred), ("FP", pred)
    terms_ok = included(triple[0], gold.get("subject_gt", "")) and included(triple[2], gold["object_gt"])
    return ("TP", gold_rel), ("TP" if terms_ok else "FN", gold_rel)


def read_jsonl(path):
    return [json.loads(l) for l in open(path, encoding="utf-8") if l.strip()]


def compute(args):
    vocab = Vocab(args.vocab)
    gold = read_jsonl(args.gold)
    if args.outcomes:
        triples = {}
        for o in read_jsonl(args.outcomes):
            t = o.get("triple")
            ok = o["kind"] == "Extracted" and t is not None
            triples[o["id"]] = (t["subject"], t["predicate"], t["object"]) if ok else None
    else:
        tape = {e["user_text"]: e["response_text"] for e in read_jsonl(args.tape) if e["mode"] == "zero_shot"}
        triples = {g["id"]: triple_from_completion(tape[g["prompt"]], vocab) for g in gold}
    counts = {p: {n: {"tp": 0, "fp": 0, "fn": 0, "support": 0} for n in vocab.names} for p in ("relation", "triple")}
    for g in gold:
        rel_v, tri_v = verdicts(triples[g["id"]], g, vocab)
        gold_rel = vocab.canonical(g["relation"])
        for proto, (verdict, cls) in (("relation", rel_v), ("triple", tri_v)):
            counts[proto][gold_rel]["support"] += 1
            counts[proto][cls][verdict.lower()] += 1
    return counts


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--gold", required=True)
    ap.add_argument("--vocab", required=True)
    src = ap.add_mutually_exclusive_group(required=True)
    src.add_argument("--outcomes")
    src.add_argument("--tape")
    ap.add_argument("--expect")
    args = ap.parse_args()
    counts = compute(args)
    if args.expect:
        expected = json.load(open(args.expect, encoding="utf-8"))
        if expected != counts:
            print("MISMATCH\nexpected: " + json.dumps(expected, sort_keys=True) + "\nactual:   " +
                  json.dumps(counts, sort_keys=True))
            return 1
        print("counts match " + args.expect)
        return 0
    print(json.dumps(counts, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
