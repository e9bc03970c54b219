"""From-scratch soft-margin SVC with RBF kernel.

Training uses simplified sequential minimal optimization: sweep the
examples, pick KKT violators as the first member of each working pair,
draw the second uniformly from a seeded generator, and solve the
two-variable subproblem analytically.  Adequate for desk-scale data and
easy to verify against a brute-force dual solver.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

import numpy as np


class DegenerateDataset(ValueError):
    pass


class NonFiniteFeature(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


class MalformedModelFile(ValueError):
    pass


MODEL_FORMAT_VERSION = 1
DUAL_EQ_TOL = 1e-6


@dataclass
class Dataset:
    """Labeled feature rows; labels are +1 (attack) / -1 (legit)."""
    features: np.ndarray  # (n, d)
    labels: np.ndarray    # (n,) in {+1, -1}

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        if self.features.ndim != 2 or len(self.features) != len(self.labels):
            raise ValueError("features must be (n, d) with n labels")

    def __len__(self):
        return len(self.labels)


@dataclass
class Scaler:
    mean: np.ndarray
    stdev: np.ndarray  # sentinel 1.0 where the feature is constant

    @classmethod
    def fit(cls, x: np.ndarray) -> "Scaler":
        mean = x.mean(axis=0)
        stdev = x.std(axis=0)
        stdev = np.where(stdev > 0, stdev, 1.0)
        return cls(mean=mean, stdev=stdev)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.mean) / self.stdev

    def inverse_transform(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z, dtype=float) * self.stdev + self.mean


def kernel_rbf(x: np.ndarray, y: np.ndarray, gamma: float) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DimensionMismatch(f"{x.shape} vs {y.shape}")
    if gamma <= 0:
        raise ValueError("gamma must be > 0")
    d = x - y
    return float(np.exp(-gamma * np.dot(d, d)))


def _kernel_matrix(x: np.ndarray, gamma: float) -> np.ndarray:
    sq = np.sum(x * x, axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d2, 0.0, out=d2)
    return np.exp(-gamma * d2)


@dataclass
class SvcModel:
    gamma: float
    C: float
    support_vectors: np.ndarray  # (m, d), already scaled
    coeffs: np.ndarray           # (m,) signed alpha_i * y_i, |coeff| <= C
    bias: float
    scaler: Scaler

    def validate(self) -> None:
        if self.gamma <= 0 or self.C <= 0:
            raise ValueError("gamma and C must be > 0")
        if np.any(np.abs(self.coeffs) > self.C + 1e-12):
            raise ValueError("coefficient magnitude exceeds C")
        if abs(float(np.sum(self.coeffs))) > DUAL_EQ_TOL:
            raise ValueError("dual equality constraint violated")


def decision_value(model: SvcModel, x: np.ndarray) -> float:
    """Signed margin; predict attack iff > 0 (ties classify legit)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != model.support_vectors.shape[1]:
        raise DimensionMismatch(
            f"{x.shape[-1]} features, model expects {model.support_vectors.shape[1]}")
    z = model.scaler.transform(x)
    d = model.support_vectors - z
    k = np.exp(-model.gamma * np.sum(d * d, axis=1))
    return float(model.coeffs @ k + model.bias)


def predict(model: SvcModel, x: np.ndarray) -> int:
    return 1 if decision_value(model, x) > 0 else -1


def fit(train: Dataset, C: float = 10.0, gamma: float = 0.5,
        tol: float = 1e-3, max_passes: int = 20, seed: int = 0) -> SvcModel:
    """Train by simplified SMO until max_passes consecutive clean sweeps."""
    x_raw, y = train.features, train.labels
    if not np.all(np.isfinite(x_raw)):
        raise NonFiniteFeature("training features contain non-finite values")
    if len(np.unique(y)) < 2:
        raise DegenerateDataset("training data must contain both classes")
    if not set(np.unique(y)) <= {-1.0, 1.0}:
        raise ValueError("labels must be +1/-1")

    scaler = Scaler.fit(x_raw)
    x = scaler.transform(x_raw)
    n = len(y)
    k = _kernel_matrix(x, gamma)
    ky = k * y[None, :]  # ky[i] @ alpha = sum_j alpha_j y_j K(i, j)

    rng = random.Random(seed)
    alpha = np.zeros(n)
    b = 0.0
    clean_sweeps = 0
    while clean_sweeps < max_passes:
        changed = 0
        for i in range(n):
            e_i = float(ky[i] @ alpha) + b - y[i]
            r_i = y[i] * e_i
            if not ((r_i < -tol and alpha[i] < C) or (r_i > tol and alpha[i] > 0)):
                continue
            j = rng.randrange(n - 1)
            if j >= i:
                j += 1
            e_j = float(ky[j] @ alpha) + b - y[j]
            a_i_old, a_j_old = alpha[i], alpha[j]
            if y[i] != y[j]:
                lo = max(0.0, a_j_old - a_i_old)
                hi = min(C, C + a_j_old - a_i_old)
            else:
                lo = max(0.0, a_i_old + a_j_old - C)
                hi = min(C, a_i_old + a_j_old)
            if lo >= hi:
                continue
            eta = 2.0 * k[i, j] - k[i, i] - k[j, j]
            if eta >= 0:
                continue
            a_j = a_j_old - y[j] * (e_i - e_j) / eta
            a_j = min(hi, max(lo, a_j))
            if abs(a_j - a_j_old) < 1e-12:
                continue
            a_i = a_i_old + y[i] * y[j] * (a_j_old - a_j)
            alpha[i], alpha[j] = a_i, a_j
            b1 = b - e_i - y[i] * (a_i - a_i_old) * k[i, i] \
                - y[j] * (a_j - a_j_old) * k[i, j]
            b2 = b - e_j - y[i] * (a_i - a_i_old) * k[i, j] \
                - y[j] * (a_j - a_j_old) * k[j, j]
            if 0 < a_i < C:
                b = b1
            elif 0 < a_j < C:
                b = b2
            else:
                b = (b1 + b2) / 2.0
            changed += 1
        clean_sweeps = clean_sweeps + 1 if changed == 0 else 0

    b = bias_from_kkt(alpha, y, ky @ alpha, C)
    sv = alpha > 1e-12
    model = SvcModel(gamma=gamma, C=C, support_vectors=x[sv],
                     coeffs=alpha[sv] * y[sv], bias=float(b), scaler=scaler)
    model.validate()
    return model


def bias_from_kkt(alpha: np.ndarray, y: np.ndarray, margins: np.ndarray,
                  C: float, atol: float = 1e-9) -> float:
    """Canonical bias for a solved dual: mean over free support vectors, or
    the midpoint of the feasible KKT interval when every alpha is at a bound.
    margins[i] must be sum_j alpha_j y_j K(x_i, x_j)."""
    e = y - margins
    free = (alpha > atol * C) & (alpha < C * (1 - atol))
    if np.any(free):
        return float(e[free].mean())
    at_zero = alpha <= atol * C
    upper = e[(at_zero & (y < 0)) | (~at_zero & (y > 0))]
    lower = e[(at_zero & (y > 0)) | (~at_zero & (y < 0))]
    hi = float(upper.min()) if len(upper) else np.inf
    lo = float(lower.max()) if len(lower) else -np.inf
    if np.isinf(hi) and np.isinf(lo):
        return 0.0
    if np.isinf(hi):
        return lo
    if np.isinf(lo):
        return hi
    return (lo + hi) / 2.0


@dataclass
class EvalReport:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def precision(self):
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else None

    @property
    def recall(self):
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else None

    @property
    def accuracy(self):
        total = self.tp + self.fp + self.tn + self.fn
        return (self.tp + self.tn) / total if total else None

    def as_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn,
                "precision": self.precision, "recall": self.recall,
                "accuracy": self.accuracy}


def evaluate(model: SvcModel, test: Dataset) -> EvalReport:
    """Confusion counts with attack (+1) as the positive class."""
    tp = fp = tn = fn = 0
    for row, label in zip(test.features, test.labels):
        pred = predict(model, row)
        if pred == 1 and label == 1:
            tp += 1
        elif pred == 1 and label == -1:
            fp += 1
        elif pred == -1 and label == -1:
            tn += 1
        else:
            fn += 1
    return EvalReport(tp=tp, fp=fp, tn=tn, fn=fn)


# ---------------------------------------------------------------------------
# Persistence: line-oriented text, exact decimal round trip via repr.
# ---------------------------------------------------------------------------

def save_model(model: SvcModel, path: str) -> None:
    m, d = model.support_vectors.shape if model.support_vectors.size else (0, len(model.scaler.mean))
    lines = [
        f"version {MODEL_FORMAT_VERSION}",
        f"gamma {float(model.gamma)!r}",
        f"C {float(model.C)!r}",
        f"bias {float(model.bias)!r}",
        f"n_features {d}",
        f"n_sv {len(model.coeffs)}",
        "scaler_mean " + " ".join(repr(float(v)) for v in model.scaler.mean),
        "scaler_stdev " + " ".join(repr(float(v)) for v in model.scaler.stdev),
    ]
    for coeff, sv in zip(model.coeffs, model.support_vectors):
        lines.append(" ".join([repr(float(coeff))] + [repr(float(v)) for v in sv]))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _header_field(lines: list[str], idx: int, name: str, path: str) -> list[str]:
    if idx >= len(lines):
        raise MalformedModelFile(f"{path}: truncated before {name} (line {idx + 1})")
    parts = lines[idx].split(" ")
    if parts[0] != name:
        raise MalformedModelFile(f"{path}:{idx + 1}: expected '{name}', got {parts[0]!r}")
    return parts[1:]


def load_model(path: str) -> SvcModel:
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    try:
        version = int(_header_field(lines, 0, "version", path)[0])
        if version != MODEL_FORMAT_VERSION:
            raise MalformedModelFile(f"{path}: unsupported version {version}")
        gamma = float(_header_field(lines, 1, "gamma", path)[0])
        c = float(_header_field(lines, 2, "C", path)[0])
        bias = float(_header_field(lines, 3, "bias", path)[0])
        n_features = int(_header_field(lines, 4, "n_features", path)[0])
        n_sv = int(_header_field(lines, 5, "n_sv", path)[0])
        mean = np.array([float(v) for v in _header_field(lines, 6, "scaler_mean", path)])
        stdev = np.array([float(v) for v in _header_field(lines, 7, "scaler_stdev", path)])
    except (ValueError, IndexError) as exc:
        if isinstance(exc, MalformedModelFile):
            raise
        raise MalformedModelFile(f"{path}: bad header: {exc}") from exc
    if len(mean) != n_features or len(stdev) != n_features:
        raise MalformedModelFile(f"{path}: scaler length != n_features")
    sv_lines = lines[8:]
    if len(sv_lines) != n_sv:
        raise MalformedModelFile(f"{path}: expected {n_sv} support vectors, found {len(sv_lines)}")
    coeffs = np.zeros(n_sv)
    svs = np.zeros((n_sv, n_features))
    for i, ln in enumerate(sv_lines):
        vals = ln.split(" ")
        if len(vals) != n_features + 1:
            raise MalformedModelFile(f"{path}:{9 + i}: expected {n_features + 1} fields")
        try:
            coeffs[i] = float(vals[0])
            svs[i] = [float(v) for v in vals[1:]]
        except ValueError as exc:
            raise MalformedModelFile(f"{path}:{9 + i}: {exc}") from exc
    model = SvcModel(gamma=gamma, C=c, support_vectors=svs, coeffs=coeffs,
                     bias=bias, scaler=Scaler(mean=mean, stdev=stdev))
    try:
        model.validate()
    except ValueError as exc:
        raise MalformedModelFile(f"{path}: {exc}") from exc
    return model
