#!/usr/bin/env python3
"""Trains the small byte-level BPE vocabulary shipped in data/.

Chunks follow the library's pretokenisation: a new chunk starts at each
whitespace byte that follows a non-whitespace byte. Merges never cross chunks.
Deterministic: ties go to the lexicographically smallest pair.
"""

import collections
import json
import pathlib

HERE = pathlib.Path(__file__).resolve().parent
N_MERGES = 400

CORPUS = """
The revolution began in the spring, when the old order could no longer hold.
A revolution is a change in the structure of power, and every revolution
has its own story. The history of the revolution was written by those who
survived it. Students of history learn that revolutions rarely follow a plan.
The question of what caused the revolution has no single answer.
Language models read text as a sequence of tokens. A tokenizer splits the
text into tokens, and the same string can be split in many different ways.
The canonical tokenization is the one produced by the encoder; any other
split of the same string is a non-canonical tokenization.
When the tokenization changes, the prediction of the model may change too.
Which of the following is the capital of France? Paris is the capital.
Which planet is closest to the sun? Mercury is the closest planet.
What is the boiling point of water at sea level? One hundred degrees.
Which animal is known as the king of the jungle? The lion is the king.
How many days are there in a week? There are seven days in a week.
What colour is the sky on a clear day? The sky is blue on a clear day.
Which ocean is the largest on the planet? The Pacific is the largest ocean.
Who wrote the play about the prince of Denmark? Shakespeare wrote it.
What do plants need to grow? Plants need light, water and air to grow.
Which metal is liquid at room temperature? Mercury is a liquid metal.
The answer to the question is in the text; read the question carefully.
Every answer has a reason, and every reason has an answer.
The evolution of the solution is a revolution of the resolution.
Tokens, tokenizers and tokenization: the words share a common root.
The students answered the questions in the order they were given.
"""


def chunks(data: bytes):
    out, start = [], 0
    for i in range(1, len(data)):
        if data[i : i + 1].isspace() and not data[i - 1 : i].isspace():
            out.append(data[start:i])
            start = i
    if data:
        out.append(data[start:])
    return out


def escape(b: bytes) -> str:
    s = []
    for c in b:
        if c == 0x5C:
            s.append("\\\\")
        elif 0x21 <= c <= 0x7E:
            s.append(chr(c))
        else:
            s.append("\\x%02x" % c)
    return "".join(s)


def main():
    freq = collections.Counter(chunks(" ".join(CORPUS.split("\n")).strip().encode()))
    words = {w: [bytes([c]) for c in w] for w in freq}
    vocab = {bytes([b]): b for b in range(256)}
    merges = []
    for _ in range(N_MERGES):
        pairs = collections.Counter()
        for w, n in freq.items():
            syms = words[w]
            for a, b in zip(syms, syms[1:]):
                pairs[(a, b)] += n
        if not pairs:
            break
        best = min(pairs, key=lambda p: (-pairs[p], p))
        if pairs[best] < 2:
            break
        merged = best[0] + best[1]
        merges.append(best)
        vocab.setdefault(merged, len(vocab))
        for w in words:
            syms, out, i = words[w], [], 0
            while i < len(syms):
                if i + 1 < len(syms) and (syms[i], syms[i + 1]) == best:
                    out.append(merged)
                    i += 2
                else:
                    out.append(syms[i])
                    i += 1
            words[w] = out
    (HERE / "vocab.json").write_text(
        json.dumps({escape(k): v for k, v in sorted(vocab.items(), key=lambda kv: kv[1])}, indent=0) + "\n"
    )
    with open(HERE / "merges.txt", "w") as f:
        f.write("# byte-level BPE merges, highest priority first\n")
        for a, b in merges:
            f.write("%s %s\n" % (escape(a), escape(b)))


if __name__ == "__main__":
    main()
