"""Evaluation: retrieval accuracy, answer metrics, and experiment runs.

Three answer metrics are computed per item (token-overlap F1, embedding
cosine, judge-model grade), all on a 0..100 scale so they can sit in one
table and be correlated against human scores.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Chunk
from .dataset import QADataset, dataset_fingerprint
from .generation import PT_TEMPLATE, PromptTemplate, answer_with_chunks
from .providers.base import ChatModel, Embedder
from .retrieval import RetrievalResult, Retriever
from .tokens import tokenize


class EvaluationError(Exception):
    """Invalid evaluation request or malformed inputs."""


# ---------------------------------------------------------------------------
# Token-overlap F1
# ---------------------------------------------------------------------------


def token_f1(reference: str, candidate: str) -> float:
    """Multiset token F1 between two strings, scaled to 0..100.

    Two empty strings agree perfectly (100); one-sided emptiness is total
    disagreement (0).
    """
    ref = tokenize(reference)
    cand = tokenize(candidate)
    if not ref and not cand:
        return 100.0
    if not ref or not cand:
        return 0.0
    counts: dict[str, int] = {}
    for tok in ref:
        counts[tok] = counts.get(tok, 0) + 1
    common = 0
    for tok in cand:
        if counts.get(tok, 0) > 0:
            counts[tok] -= 1
            common += 1
    if common == 0:
        return 0.0
    precision = common / len(cand)
    recall = common / len(ref)
    return 100.0 * 2.0 * precision * recall / (precision + recall)


# ---------------------------------------------------------------------------
# Embedding cosine
# ---------------------------------------------------------------------------


def embedding_cosine(reference: str, candidate: str, embedder: Embedder) -> float:
    """Cosine similarity of the two texts' embeddings, clamped to 0..100."""
    ref_vec, cand_vec = embedder.embed([reference, candidate])
    dot = sum(a * b for a, b in zip(ref_vec, cand_vec))
    norm_r = math.sqrt(sum(a * a for a in ref_vec))
    norm_c = math.sqrt(sum(b * b for b in cand_vec))
    if norm_r == 0.0 or norm_c == 0.0:
        return 0.0
    return max(0.0, dot / (norm_r * norm_c)) * 100.0


# ---------------------------------------------------------------------------
# Judge model
# ---------------------------------------------------------------------------


class JudgeVerdict(Enum):
    TOTALLY_CORRECT = "Totally correct"
    MOSTLY_CORRECT = "Mostly correct"
    INCORRECT = "Incorrect"

    @property
    def points(self) -> float:
        return _JUDGE_POINTS[self]


_JUDGE_POINTS = {
    JudgeVerdict.TOTALLY_CORRECT: 100.0,
    JudgeVerdict.MOSTLY_CORRECT: 50.0,
    JudgeVerdict.INCORRECT: 0.0,
}


@dataclass(frozen=True)
class JudgeResult:
    verdict: JudgeVerdict
    parse_failed: bool
    raw: str

    @property
    def points(self) -> float:
        return self.verdict.points


JUDGE_INSTRUCTIONS = (
    "Avalie a resposta candidata comparando-a com a resposta de referência "
    "e o trecho de apoio. Comece sua avaliação com exatamente um destes "
    "rótulos: Totally correct, Mostly correct ou Incorrect."
)


def judge_prompt(question: str, reference: str, support: str, candidate: str) -> str:
    return (
        f"{JUDGE_INSTRUCTIONS}\n\n"
        f"[question]\n{question}\n"
        f"[reference_answer]\n{reference}\n"
        f"[supporting_text]\n{support}\n"
        f"[candidate_answer]\n{candidate}\n"
        f"[end]"
    )


def parse_verdict(text: str) -> JudgeVerdict | None:
    """Earliest verdict label in the text, case-insensitive; None if absent."""
    lower = text.lower()
    best: tuple[int, JudgeVerdict] | None = None
    for verdict in JudgeVerdict:
        pos = lower.find(verdict.value.lower())
        if pos >= 0 and (best is None or pos < best[0]):
            best = (pos, verdict)
    return best[1] if best else None


def llm_judge(
    question: str,
    reference: str,
    support: str,
    candidate: str,
    judge: ChatModel,
) -> JudgeResult:
    """Grade a candidate answer with a judge model.

    An empty candidate is Incorrect without a model call. Output with no
    recognizable label is retried once; a second miss yields Incorrect
    with ``parse_failed`` set.
    """
    if not candidate.strip():
        return JudgeResult(JudgeVerdict.INCORRECT, parse_failed=False, raw="")
    prompt = judge_prompt(question, reference, support, candidate)
    raw = ""
    for _ in range(2):
        raw = judge.complete(prompt)
        verdict = parse_verdict(raw)
        if verdict is not None:
            return JudgeResult(verdict, parse_failed=False, raw=raw)
    return JudgeResult(JudgeVerdict.INCORRECT, parse_failed=True, raw=raw)


# ---------------------------------------------------------------------------
# Retrieval accuracy
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TopKResult:
    k: int
    hits: int
    total: int

    @property
    def accuracy(self) -> float:
        return self.hits / self.total if self.total else 0.0


def topk_accuracy(
    results: Sequence[RetrievalResult],
    golds: Sequence[str],
    ks: Sequence[int],
) -> dict[int, TopKResult]:
    """Fraction of queries whose gold chunk appears in the top k.

    Every ranking must be deep enough for the largest k requested, unless
    it already covers its whole corpus.
    """
    if len(results) != len(golds):
        raise EvaluationError(
            f"{len(results)} rankings for {len(golds)} gold ids"
        )
    if not ks:
        raise EvaluationError("no k values requested")
    if min(ks) < 1:
        raise EvaluationError(f"k values must be >= 1, got {min(ks)}")
    max_k = max(ks)
    for result in results:
        deep_enough = result.requested_k >= max_k or (
            result.corpus_size is not None and result.requested_k >= result.corpus_size
        )
        if not deep_enough:
            raise EvaluationError(
                f"ranking from {result.retriever_id!r} was requested at depth "
                f"{result.requested_k}, too shallow for top-{max_k}"
            )
    out: dict[int, TopKResult] = {}
    for k in ks:
        hits = 0
        for result, gold in zip(results, golds):
            if gold in (cid for cid, _ in result.ranked[:k]):
                hits += 1
        out[k] = TopKResult(k=k, hits=hits, total=len(golds))
    return out


def accuracy_curve(
    dataset: QADataset,
    retriever: Retriever,
    max_k: int = 100,
    use_paraphrase: bool = False,
) -> list[tuple[int, float]]:
    """Top-k accuracy for every k from 1 to ``max_k`` (one retrieval pass)."""
    results: list[RetrievalResult] = []
    golds: list[str] = []
    for item in dataset.items:
        query = _pick_question(item, use_paraphrase)
        results.append(retriever.search(query, max_k))
        golds.append(item.gold_chunk_id)
    table = topk_accuracy(results, golds, range(1, max_k + 1))
    return [(k, table[k].accuracy) for k in range(1, max_k + 1)]


def write_accuracy_curve(curve: Sequence[tuple[int, float]], path: str | Path) -> None:
    """Plot-ready CSV: header then one ``k,accuracy`` row per k."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "accuracy"])
        for k, acc in curve:
            writer.writerow([k, f"{acc:.6f}"])


# ---------------------------------------------------------------------------
# Correlation
# ---------------------------------------------------------------------------


def pearson(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    """Pearson correlation; None when either side has zero variance."""
    if len(xs) != len(ys):
        raise EvaluationError(f"length mismatch: {len(xs)} vs {len(ys)}")
    n = len(xs)
    if n < 2:
        return None
    mean_x = math.fsum(xs) / n
    mean_y = math.fsum(ys) / n
    dx = [x - mean_x for x in xs]
    dy = [y - mean_y for y in ys]
    var_x = math.fsum(d * d for d in dx)
    var_y = math.fsum(d * d for d in dy)
    if var_x == 0.0 or var_y == 0.0:
        return None
    cov = math.fsum(a * b for a, b in zip(dx, dy))
    return cov / math.sqrt(var_x * var_y)


def metric_correlation(
    columns: Mapping[str, Sequence[float]],
) -> dict[str, dict[str, float | None]]:
    """Pairwise Pearson matrix over named metric columns.

    Diagonal entries are pinned to 1.0; off-diagonal entries involving a
    constant column are None.
    """
    names = list(columns)
    lengths = {len(columns[n]) for n in names}
    if len(lengths) > 1:
        raise EvaluationError(f"columns differ in length: {sorted(lengths)}")
    matrix: dict[str, dict[str, float | None]] = {}
    for a in names:
        matrix[a] = {}
        for b in names:
            matrix[a][b] = 1.0 if a == b else pearson(columns[a], columns[b])
    return matrix


def load_human_scores(path: str | Path) -> dict[str, float]:
    """Read an ``item_id,score`` CSV of human grades (0..100)."""
    path = Path(path)
    scores: dict[str, float] = {}
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"item_id", "score"} <= set(reader.fieldnames):
            raise EvaluationError(f"{path} must have item_id and score columns")
        for row in reader:
            try:
                scores[row["item_id"]] = float(row["score"])
            except ValueError as exc:
                raise EvaluationError(
                    f"bad score for item {row['item_id']!r}: {row['score']!r}"
                ) from exc
    return scores


# ---------------------------------------------------------------------------
# Experiment runs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalReport:
    """One experiment condition: a fixed k and fixed models."""

    k: int
    retriever_id: str
    generator_model_id: str
    judge_model_id: str
    embedder_model_id: str
    prompt_version: str
    corpus_fingerprint: str
    dataset_fingerprint: str
    records: tuple[dict, ...]
    aggregates: dict
    topk: dict[int, TopKResult]


def _pick_question(item, use_paraphrase: bool) -> str:
    if use_paraphrase and item.paraphrase:
        return item.paraphrase
    return item.question


def aggregate_records(records: Sequence[dict]) -> dict:
    """Mean metrics over all records and over the gold-in-context subset.

    Recomputable from a report's per-item records; an empty subset keeps
    its count but omits the means.
    """
    def block(rows: Sequence[dict]) -> dict:
        out: dict = {"count": len(rows)}
        if rows:
            for metric, key in (
                ("mean_f1", "f1"),
                ("mean_cosine", "cosine"),
                ("mean_judge", "judge_points"),
            ):
                out[metric] = math.fsum(r[key] for r in rows) / len(rows)
            out["judge_parse_failures"] = sum(1 for r in rows if r["judge_parse_failed"])
        return out

    return {
        "all": block(records),
        "gold_in_context": block([r for r in records if r["gold_in_context"]]),
    }


def run_experiment(
    dataset: QADataset,
    retriever: Retriever | None,
    chunk_lookup: Mapping[str, Chunk],
    chat: ChatModel,
    judge: ChatModel,
    embedder: Embedder,
    ks: Sequence[int],
    template: PromptTemplate = PT_TEMPLATE,
    max_prompt_chars: int | None = None,
    use_paraphrase: bool = False,
    accuracy_ks: Sequence[int] = (1, 5),
) -> list[EvalReport]:
    """Answer and grade every dataset item at each context depth k.

    For k > 0 each item is retrieved once at depth ``max(k, max(accuracy_ks))``;
    the top-k prefix builds the prompt and the full ranking feeds top-k
    accuracy. ``k == 0`` is the no-retrieval baseline: the retriever is
    never called and every item counts as gold-not-in-context.
    """
    if not ks:
        raise EvaluationError("no k values requested")
    if min(ks) < 0:
        raise EvaluationError(f"k values must be >= 0, got {min(ks)}")
    if any(k > 0 for k in ks) and retriever is None:
        raise EvaluationError("k > 0 requires a retriever")

    reports: list[EvalReport] = []
    for k in ks:
        records: list[dict] = []
        results: list[RetrievalResult] = []
        golds: list[str] = []
        retriever_id = "none"
        for item in dataset.items:
            question = _pick_question(item, use_paraphrase)
            ranked: list[tuple[Chunk, float]] = []
            if k > 0:
                depth = max(k, max(accuracy_ks))
                result = retriever.search(question, depth)
                retriever_id = result.retriever_id
                results.append(result)
                golds.append(item.gold_chunk_id)
                for cid, score in result.ranked[:k]:
                    if cid not in chunk_lookup:
                        raise EvaluationError(f"retriever returned unknown chunk {cid!r}")
                    ranked.append((chunk_lookup[cid], score))
            grounded = answer_with_chunks(
                question, ranked, chat, retriever_id, template, max_prompt_chars
            )
            context_ids = [c.chunk_id for c in grounded.citations]
            gold_in_context = item.gold_chunk_id in context_ids
            f1 = token_f1(item.answer, grounded.answer)
            cosine = embedding_cosine(item.answer, grounded.answer, embedder)
            judged = llm_judge(
                question, item.answer, item.supporting_text, grounded.answer, judge
            )
            records.append({
                "item_id": item.id,
                "question": question,
                "used_paraphrase": use_paraphrase and bool(item.paraphrase),
                "reference_answer": item.answer,
                "answer": grounded.answer,
                "context_chunk_ids": context_ids,
                "gold_chunk_id": item.gold_chunk_id,
                "gold_in_context": gold_in_context,
                "f1": f1,
                "cosine": cosine,
                "judge_verdict": judged.verdict.value,
                "judge_points": judged.points,
                "judge_parse_failed": judged.parse_failed,
            })
        topk = topk_accuracy(results, golds, accuracy_ks) if results else {}
        reports.append(EvalReport(
            k=k,
            retriever_id=retriever_id,
            generator_model_id=chat.model_id,
            judge_model_id=judge.model_id,
            embedder_model_id=embedder.model_id,
            prompt_version=template.version(),
            corpus_fingerprint=dataset.corpus_fingerprint,
            dataset_fingerprint=dataset_fingerprint(dataset.items),
            records=tuple(records),
            aggregates=aggregate_records(records),
            topk=topk,
        ))
    return reports


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------


def report_to_dict(report: EvalReport) -> dict:
    return {
        "k": report.k,
        "retriever_id": report.retriever_id,
        "generator_model_id": report.generator_model_id,
        "judge_model_id": report.judge_model_id,
        "embedder_model_id": report.embedder_model_id,
        "prompt_version": report.prompt_version,
        "corpus_fingerprint": report.corpus_fingerprint,
        "dataset_fingerprint": report.dataset_fingerprint,
        "topk": {
            str(k): {"k": r.k, "hits": r.hits, "total": r.total, "accuracy": r.accuracy}
            for k, r in report.topk.items()
        },
        "aggregates": report.aggregates,
        "records": list(report.records),
    }


def save_report(report: EvalReport, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(report_to_dict(report), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )


def load_report(path: str | Path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_records_csv(report: EvalReport, path: str | Path) -> None:
    """Flat per-item CSV for spreadsheet review."""
    path = Path(path)
    columns = [
        "item_id", "question", "used_paraphrase", "reference_answer", "answer",
        "gold_chunk_id", "gold_in_context", "f1", "cosine",
        "judge_verdict", "judge_points", "judge_parse_failed",
    ]
    with path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(columns)
        for rec in report.records:
            writer.writerow([rec[c] for c in columns])
