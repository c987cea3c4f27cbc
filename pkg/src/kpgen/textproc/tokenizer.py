"""Lowercasing word/punctuation tokenizer with digit-run folding."""

from __future__ import annotations

import re

# Reserved token strings and their fixed ids.
PAD, BOS, EOS, UNK, DIGIT = "<pad>", "<bos>", "<eos>", "<unk>", "<digit>"
RESERVED_TOKENS = (PAD, BOS, EOS, UNK, DIGIT)
PAD_ID, BOS_ID, EOS_ID, UNK_ID, DIGIT_ID = range(5)

# A token is a run of letters, a run of decimal digits, one punctuation
# character, or an underscore. Mixed forms like "2nd" therefore split into
# a digit run plus a letter run.
_TOKEN_RE = re.compile(r"[^\W\d_]+|\d+|[^\w\s]|_")


def tokenize(text: str) -> list[str]:
    """Lowercased tokens; every maximal digit run becomes the single token <digit>.

    Punctuation characters are kept as their own one-character tokens.
    Empty or whitespace-only text yields an empty list.
    """
    tokens = []
    for match in _TOKEN_RE.finditer(text.lower()):
        tok = match.group(0)
        tokens.append(DIGIT if tok[0].isdigit() else tok)
    return tokens
