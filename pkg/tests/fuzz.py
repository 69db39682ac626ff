"""Mutation fuzzer for .tbc documents."""

import numpy as np

WEIRD = ["", "=", "==", "nan", "inf", "-inf", "1e999", "1e-999", "0x10", "1_000", "٤", " ",
         "\x00", "#", "\t", "\r", "layer", "slot=", "theta=-", "9" * 40, "-0", "+.5", "5.", "é", " "]


def mutate(text: str, rng: np.random.Generator, n_ops: int = 3) -> str:
    for _ in range(n_ops):
        op = rng.integers(7)
        if op == 0 and text:  # delete a span
            i = rng.integers(len(text))
            text = text[:i] + text[i + rng.integers(1, 6):]
        elif op == 1:  # insert a random character
            i = rng.integers(len(text) + 1)
            text = text[:i] + chr(int(rng.integers(0, 0x3000))) + text[i:]
        elif op == 2:  # insert a nasty token
            i = rng.integers(len(text) + 1)
            text = text[:i] + WEIRD[rng.integers(len(WEIRD))] + text[i:]
        elif op == 3:  # duplicate a line
            lines = text.split("\n")
            k = rng.integers(len(lines))
            lines.insert(k, lines[k])
            text = "\n".join(lines)
        elif op == 4:  # drop a line
            lines = text.split("\n")
            del lines[rng.integers(len(lines))]
            text = "\n".join(lines)
        elif op == 5:  # swap two characters
            if len(text) > 1:
                i, j = sorted(rng.integers(len(text), size=2))
                t = list(text)
                t[i], t[j] = t[j], t[i]
                text = "".join(t)
        else:  # replace a digit run
            digits = [i for i, ch in enumerate(text) if ch.isdigit()]
            if digits:
                i = digits[rng.integers(len(digits))]
                text = text[:i] + str(int(rng.integers(-50, 10**6))) + text[i + 1:]
    return text
