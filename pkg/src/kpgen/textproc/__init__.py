"""Text processing: tokenization, stemming, vocabularies, corpus handling."""

from .corpus import (
    Document,
    EncodedPair,
    LoadReport,
    PhrasePartition,
    SOURCE_SEPARATOR,
    build_vocabulary,
    decode_extended,
    encode_pair,
    is_subsequence,
    load_corpus,
    parse_document,
    partition_keyphrases,
    present_proportion,
    save_corpus,
    split_pairs,
)
from .stem import stem_phrase, stem_word
from .tokenizer import (
    BOS,
    BOS_ID,
    DIGIT,
    DIGIT_ID,
    EOS,
    EOS_ID,
    PAD,
    PAD_ID,
    RESERVED_TOKENS,
    UNK,
    UNK_ID,
    tokenize,
)
from .vocab import Vocabulary, count_tokens

__all__ = [
    "BOS",
    "BOS_ID",
    "DIGIT",
    "DIGIT_ID",
    "Document",
    "EOS",
    "EOS_ID",
    "EncodedPair",
    "LoadReport",
    "PAD",
    "PAD_ID",
    "PhrasePartition",
    "RESERVED_TOKENS",
    "SOURCE_SEPARATOR",
    "UNK",
    "UNK_ID",
    "Vocabulary",
    "build_vocabulary",
    "count_tokens",
    "decode_extended",
    "encode_pair",
    "is_subsequence",
    "load_corpus",
    "parse_document",
    "partition_keyphrases",
    "present_proportion",
    "save_corpus",
    "split_pairs",
    "stem_phrase",
    "stem_word",
    "tokenize",
]
