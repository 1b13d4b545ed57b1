"""k-fold cross-validation of win-probability methods on real benchmark tables."""

from __future__ import annotations

import itertools
import json
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import InfeasibleError, MethodError
from .methods import Method, MethodResult
from .ranking import EPSILON, BenchmarkSample


def fold_indices(n: int, k: int, seed: int) -> list[np.ndarray]:
    """Shuffle ``0..n-1`` with ``seed`` and cut into k folds differing in size by at most one."""
    if k < 2:
        raise InfeasibleError("need at least two folds")
    if k > n:
        raise InfeasibleError(f"k={k} folds exceed n={n} datasets")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def heldout_cross_entropy(p, winners, eps: float = EPSILON) -> float:
    p = np.asarray(p, dtype=float)
    return float(-np.log(np.maximum(p[np.asarray(winners)], eps)).mean())


def paired_pvalue(losses_a: Sequence[float], losses_b: Sequence[float],
                  test: str = "t", seed: int = 0) -> float:
    """Two-sided p-value that two methods' per-fold losses differ.

    ``test="t"`` is a paired t-test; ``"permutation"`` an exact sign-flip
    test on the differences (Monte Carlo with 2**16 draws past 20 folds).
    All-zero differences give 1.0; constant non-zero differences give 0.0.
    """
    a = np.asarray(losses_a, dtype=float)
    b = np.asarray(losses_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if a.size < 2:
        raise ValueError("need at least two folds")
    d = a - b
    if np.all(d == 0):
        return 1.0
    if test == "t":
        sd = d.std(ddof=1)
        if sd == 0:
            return 0.0
        t = d.mean() / (sd / math.sqrt(d.size))
        return float(min(1.0, 2.0 * stats.t.sf(abs(t), d.size - 1)))
    if test == "permutation":
        observed = abs(d.sum())
        if d.size <= 20:
            signs = np.array(list(itertools.product((1.0, -1.0), repeat=d.size)))
        else:
            signs = np.random.default_rng(seed).choice((1.0, -1.0), size=(1 << 16, d.size))
        sums = np.abs(signs @ d)
        return float(np.mean(sums >= observed - 1e-12))
    raise ValueError(f"unknown test {test!r}")


@dataclass
class MethodCv:
    fold_losses: list[float]
    mean_loss: float
    win_prob: list[float] | None = None
    pvalue: float | None = None


@dataclass
class CvReport:
    """Cross-validated held-out cross-entropy per method."""

    names: tuple[str, ...]
    k: int
    seed: int
    eps: float
    reference: str
    test: str
    folds: list[list[int]]
    methods: dict[str, MethodCv] = field(default_factory=dict)

    def top(self, method: str, count: int = 3) -> list[str]:
        p = self.methods[method].win_prob
        if p is None:
            return []
        order = np.argsort(-np.asarray(p), kind="stable")[:count]
        return [self.names[i] for i in order]

    def to_dict(self) -> dict:
        return {
            "k": self.k, "seed": self.seed, "eps": self.eps,
            "reference": self.reference, "test": self.test,
            "algorithms": list(self.names), "folds": self.folds,
            "methods": {name: {"fold_losses": mc.fold_losses, "mean_loss": mc.mean_loss,
                               "win_prob": mc.win_prob, "pvalue_vs_reference": mc.pvalue,
                               "top3": self.top(name)}
                        for name, mc in self.methods.items()},
        }

    def to_json(self, extra: Mapping | None = None) -> str:
        d = self.to_dict()
        if extra:
            d = {**extra, **d}
        return json.dumps(d, indent=2)

    def to_table(self) -> str:
        header = ["Scheme", "First", "Second", "Third", "Average Loss", f"p vs {self.reference}"]
        lines = []
        for name, mc in self.methods.items():
            top = self.top(name) + [""] * 3
            pv = "" if mc.pvalue is None else f"{mc.pvalue:.4g}"
            lines.append([name, *top[:3], f"{mc.mean_loss:.6g}", pv])
        widths = [max(len(str(r[i])) for r in [header] + lines) for i in range(len(header))]
        fmt = "  ".join("{:<%d}" % w for w in widths)
        return "\n".join([fmt.format(*header)] + [fmt.format(*r) for r in lines]) + "\n"


def kfold_cv(sample: BenchmarkSample, k: int, methods: Mapping[str, Method], seed: int = 0, *,
             eps: float = EPSILON, reference: str | None = None,
             test: str = "t") -> CvReport:
    """Fit every method on k-1 folds and score held-out winners by cross-entropy.

    The loss of a fold is ``-mean log max(phat[winner], eps)`` over its
    datasets. Methods without a probability output cannot be scored and are
    rejected. Each method is also fitted on the whole sample so the report
    can list its top algorithms.

    Raises:
        InfeasibleError: ``k < 2`` or ``k > n``.
        MethodError: A method failed on some training split.
    """
    folds = fold_indices(sample.n, k, seed)
    reference = reference or next(iter(methods))
    report = CvReport(sample.names, k, seed, eps, reference, test,
                      [f.tolist() for f in folds])
    all_idx = np.arange(sample.n)
    winners = sample.winners
    for name, method in methods.items():
        losses = []
        for f in folds:
            train = sample.subset(np.setdiff1d(all_idx, f))
            try:
                res: MethodResult = method(train)
            except Exception as exc:  # noqa: BLE001 - surfaced with method name
                raise MethodError(name, exc) from exc
            if res.win_prob is None:
                raise MethodError(name, ValueError("method has no probability output"))
            losses.append(heldout_cross_entropy(res.win_prob, winners[f], eps))
        try:
            full = method(sample).win_prob
        except Exception as exc:  # noqa: BLE001
            raise MethodError(name, exc) from exc
        report.methods[name] = MethodCv(losses, float(np.mean(losses)),
                                        None if full is None else list(map(float, full)))
    if reference in report.methods:
        ref = report.methods[reference].fold_losses
        for name, mc in report.methods.items():
            if name != reference:
                mc.pvalue = paired_pvalue(mc.fold_losses, ref, test, seed)
    return report
