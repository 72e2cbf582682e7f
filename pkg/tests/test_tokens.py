import json
from pathlib import Path

from hypothesis import given, strategies as st

from raglab.tokens import iter_words, tokenize, word_count

GOLDEN = json.loads(
    (Path(__file__).parent / "data" / "tokenizer_golden.json").read_text(encoding="utf-8")
)


def test_golden_cases():
    for case in GOLDEN["cases"]:
        assert tokenize(case["text"]) == case["tokens"], case["text"]


def test_word_count_matches_tokenize():
    text = "R$8.6 bilhões em vendas, alta de 12%."
    assert word_count(text) == len(tokenize(text))


def test_iter_words_preserves_case_and_spans():
    text = "Banco Central subiu"
    matches = list(iter_words(text))
    assert [m.group() for m in matches] == ["Banco", "Central", "subiu"]
    for m in matches:
        assert text[m.start():m.end()] == m.group()


@given(st.text())
def test_tokens_are_lowercase_and_nonempty(text):
    for tok in tokenize(text):
        assert tok
        assert tok == tok.lower()
        assert "_" not in tok


@given(st.text())
def test_tokenize_idempotent_on_joined_tokens(text):
    toks = tokenize(text)
    assert tokenize(" ".join(toks)) == toks
