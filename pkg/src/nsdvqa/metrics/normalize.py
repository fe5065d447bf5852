"""Answer normalization for accuracy scoring and tokenization for n-gram metrics.

Contraction table (apostrophe forms, straight or curly, are looked up before
punctuation stripping; any other apostrophe is deleted, so "dog's" -> "dogs")::

    isn't is not        aren't are not      wasn't was not      weren't were not
    don't do not        doesn't does not    didn't did not      can't can not
    cannot can not      won't will not      wouldn't would not  couldn't could not
    shouldn't should not  hasn't has not    haven't have not    hadn't had not
    mustn't must not    it's it is          that's that is      there's there is
    what's what is      where's where is    who's who is        he's he is
    she's she is        let's let us        i'm i am            you're you are
    we're we are        they're they are    i've i have         you've you have
    we've we have       they've they have   i'll i will         you'll you will
    he'll he will       she'll she will     we'll we will       they'll they will
    it'll it will       i'd i would         you'd you would     he'd he would
    she'd she would     we'd we would       they'd they would   y'all you all
"""

from __future__ import annotations

import re
from typing import Iterable, Union

from sklearn.base import BaseEstimator, TransformerMixin

TokenSequence = tuple[str, ...]

CONTRACTIONS = {
    "isn't": "is not", "aren't": "are not", "wasn't": "was not", "weren't": "were not",
    "don't": "do not", "doesn't": "does not", "didn't": "did not", "can't": "can not",
    "cannot": "can not", "won't": "will not", "wouldn't": "would not",
    "couldn't": "could not", "shouldn't": "should not", "hasn't": "has not",
    "haven't": "have not", "hadn't": "had not", "mustn't": "must not", "it's": "it is",
    "that's": "that is", "there's": "there is", "what's": "what is", "where's": "where is",
    "who's": "who is", "he's": "he is", "she's": "she is", "let's": "let us", "i'm": "i am",
    "you're": "you are", "we're": "we are", "they're": "they are", "i've": "i have",
    "you've": "you have", "we've": "we have", "they've": "they have", "i'll": "i will",
    "you'll": "you will", "he'll": "he will", "she'll": "she will", "we'll": "we will",
    "they'll": "they will", "it'll": "it will", "i'd": "i would", "you'd": "you would",
    "he'd": "he would", "she'd": "she would", "we'd": "we would", "they'd": "they would",
    "y'all": "you all",
}
NUMBER_WORDS = {
    "zero": "0", "one": "1", "two": "2", "three": "3", "four": "4", "five": "5",
    "six": "6", "seven": "7", "eight": "8", "nine": "9", "ten": "10",
}
ARTICLES = frozenset({"a", "an", "the"})

_WORD_WITH_APOS = re.compile(r"[a-z]+(?:'[a-z]+)+")
_DIGIT_COMMA = re.compile(r"(?<=\d),(?=\d)")
_DECIMAL = re.compile(r"(?<=\d)\.(?=\d)")
_PUNCT = re.compile(r"[^\w\s\x00]|_")


def _strip(text: str) -> str:
    text = text.replace("\x00", " ").lower().replace("’", "'").replace("‘", "'")
    text = _WORD_WITH_APOS.sub(lambda m: CONTRACTIONS.get(m.group(0), m.group(0)), text)
    text = CONTRACTIONS["cannot"].join(re.split(r"\bcannot\b", text))
    text = text.replace("'", "")
    text = _DIGIT_COMMA.sub("", text)
    text = _DECIMAL.sub("\x00", text)
    text = _PUNCT.sub(" ", text)
    return text.replace("\x00", ".")


def normalize_answer(text: str) -> TokenSequence:
    """Lowercase, expand contractions, strip punctuation, drop articles, digitize zero..ten."""
    tokens = []
    for tok in _strip(text).split():
        if tok in ARTICLES:
            continue
        tokens.append(NUMBER_WORDS.get(tok, tok))
    return tuple(tokens)


def tokenize(text: Union[str, Iterable[str]]) -> TokenSequence:
    """Caption-style tokens for n-gram metrics: lowercase, punctuation stripped, articles kept."""
    if not isinstance(text, str):
        return tuple(text)
    return tuple(_strip(text).split())


class AnswerNormalizer(TransformerMixin, BaseEstimator):
    """Stateless transformer mapping raw answers to normalized answer strings."""

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        return [" ".join(normalize_answer(x)) for x in X]
