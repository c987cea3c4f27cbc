"""Tokenizer: lowercasing, punctuation splitting, digit-run folding."""

from hypothesis import given, settings
from hypothesis import strategies as st

from kpgen.textproc import DIGIT, tokenize


def test_plain_words():
    assert tokenize("Latent Dirichlet Allocation") == ["latent", "dirichlet", "allocation"]


def test_digit_run_and_punctuation():
    assert tokenize("RFC 2616!") == ["rfc", DIGIT, "!"]


def test_empty_text():
    assert tokenize("") == []
    assert tokenize("   \t\n") == []


def test_lowercases():
    assert tokenize("GRU") == ["gru"]


def test_punctuation_split_off_words():
    assert tokenize("end-to-end learning.") == ["end", "-", "to", "-", "end", "learning", "."]


def test_each_punctuation_char_its_own_token():
    assert tokenize("wait...") == ["wait", ".", ".", "."]


def test_mixed_alphanumeric_splits():
    assert tokenize("2nd") == [DIGIT, "nd"]
    assert tokenize("mp3 files") == ["mp", DIGIT, "files"]


def test_digit_runs_fold_to_one_token():
    assert tokenize("12345") == [DIGIT]
    assert tokenize("3.14") == [DIGIT, ".", DIGIT]


def test_underscore_is_a_token():
    assert tokenize("snake_case") == ["snake", "_", "case"]


def test_unicode_letters_kept():
    assert tokenize("naïve Bayes") == ["naïve", "bayes"]


@settings(max_examples=100, deadline=None)
@given(st.text(max_size=80))
def test_tokens_never_empty_or_spacey(text):
    for tok in tokenize(text):
        assert tok
        assert tok == tok.lower()
        assert not any(c.isspace() for c in tok)


@settings(max_examples=100, deadline=None)
@given(st.text(alphabet="ab1 .", max_size=60))
def test_no_raw_digits_survive(text):
    for tok in tokenize(text):
        assert not any(c.isdigit() for c in tok)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from(["cat", "dog", "gru", "copy"]), max_size=10))
def test_roundtrip_on_simple_words(words):
    assert tokenize(" ".join(words)) == words
