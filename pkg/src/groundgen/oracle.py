"""Classical brute-force ground truth.

Enumerates every output satisfying the local-similarity constraints
(images whose 2x2 windows all appear in the catalog; token/weight
configurations in the ground manifold of the text Hamiltonian), computes
exact weight statistics, and is the reference that quantum-solver outputs
are validated against.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .encoding import ngram_layout
from .errors import InfeasibleModelError, ValidationError
from .patterns import ImagePattern, NgramModel, PatternSet

_EXHAUSTIVE_MAX_QUBITS = 25


@dataclass
class ValidSet:
    """Exhaustive sorted set of valid basis indices with weight products."""

    members: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.members = np.asarray(self.members, dtype=np.int64)
        self.weights = np.asarray(self.weights, dtype=np.int64)
        if self.members.shape != self.weights.shape:
            raise ValidationError("members and weights must align")
        order = np.argsort(self.members, kind="stable")
        self.members = self.members[order]
        self.weights = self.weights[order]
        if self.members.size > 1 and np.any(np.diff(self.members) == 0):
            raise ValidationError("duplicate members in valid set")

    def __len__(self):
        return int(self.members.size)

    def contains(self, indices) -> np.ndarray:
        """Boolean membership mask for an array of basis indices."""
        indices = np.asarray(indices, dtype=np.int64)
        pos = np.searchsorted(self.members, indices)
        pos = np.clip(pos, 0, max(self.members.size - 1, 0))
        if self.members.size == 0:
            return np.zeros(indices.shape, dtype=bool)
        return self.members[pos] == indices


def _row_pair_ok(a: int, b: int, cols: int, membership, periodic: bool) -> bool:
    c_range = range(cols) if periodic else range(cols - 1)
    for c in c_range:
        c2 = (c + 1) % cols
        patch = ImagePattern((a >> c) & 1, (a >> c2) & 1, (b >> c) & 1, (b >> c2) & 1)
        if patch not in membership:
            return False
    return True


def enumerate_valid_images(rows: int, cols: int, patterns: PatternSet,
                           periodic: bool = False,
                           exhaustive: bool = False) -> ValidSet:
    """All binary images whose every 2x2 window is in the pattern set.

    Row-by-row transfer enumeration by default (cost proportional to the
    answer); exhaustive=True scans all 2^(rows*cols) indices instead, as
    an independent cross-check.
    """
    if rows < 2 or cols < 2:
        raise ValidationError(f"need at least a 2x2 grid, got {rows}x{cols}")
    membership = patterns.patterns
    if exhaustive:
        return _enumerate_images_exhaustive(rows, cols, patterns, periodic)
    row_states = range(1 << cols)
    allowed = {}
    for a in row_states:
        nexts = [b for b in row_states
                 if _row_pair_ok(a, b, cols, membership, periodic)]
        allowed[a] = nexts
    # prefixes: (basis bits so far, first row, last row)
    prefixes = [(a, a, a) for a in row_states]
    for r in range(1, rows):
        shift = r * cols
        prefixes = [(bits | (b << shift), first, b)
                    for bits, first, last in prefixes
                    for b in allowed[last]]
    if periodic:
        prefixes = [(bits, first, last) for bits, first, last in prefixes
                    if _row_pair_ok(last, first, cols, membership, periodic)]
    members = np.array(sorted(bits for bits, _, _ in prefixes), dtype=np.int64)
    return ValidSet(members, np.ones_like(members))


def _enumerate_images_exhaustive(rows, cols, patterns, periodic):
    from .patterns import image_windows, pattern_states

    n = rows * cols
    if n > _EXHAUSTIVE_MAX_QUBITS:
        raise ValidationError(f"exhaustive scan gated at {_EXHAUSTIVE_MAX_QUBITS} qubits")
    table = np.zeros(16, dtype=bool)
    table[pattern_states(patterns)] = True
    idx = np.arange(1 << n, dtype=np.int64)
    ok = np.ones(idx.size, dtype=bool)
    for w in image_windows(rows, cols, periodic):
        codes = np.zeros(idx.size, dtype=np.int64)
        for j, q in enumerate(w.support):
            codes |= ((idx >> q) & 1) << j
        ok &= table[codes]
    members = idx[ok]
    return ValidSet(members, np.ones_like(members))


def _window_weight_options(model: NgramModel, position: int,
                           smoothing: bool) -> dict:
    """token tuple -> tuple of allowed weight-register values at a position."""
    options = {}
    for gram in model.window_patterns(position):
        options[gram.tokens] = tuple(range(1, gram.weight + 1))
    if smoothing:
        out = {}
        for tokens, vals in options.items():
            out[tokens] = (0,) + vals
        return out
    return options


def _prune_ok(values, threshold, window_size: int, exempt_zero: bool) -> bool:
    if threshold is None:
        return True
    num_windows = len(values) - window_size + 1
    if num_windows < 1:
        return True
    thresholds = (list(threshold) if np.iterable(threshold)
                  else [threshold] * num_windows)
    for l in range(num_windows):
        product = 1
        for v in values[l:l + window_size]:
            if exempt_zero and v == 0:
                continue
            product *= v
        if product < thresholds[l]:
            return False
    return True


def enumerate_valid_sequences(model: NgramModel, seq_len: int,
                              smoothing: bool = False,
                              prune_threshold=None,
                              prune_window: int = 2,
                              prune_exempt_zero: bool = False) -> ValidSet:
    """All (token sequence, weight assignment) pairs in the ground manifold.

    Token registers run over their full code range (out-of-vocabulary
    codes included), since smoothing admits any token combination with
    the zero-weight label. Pruned configurations are excluded.
    """
    layout = ngram_layout(seq_len, model.order, model.vocabulary.size,
                          model.resolution)
    tokens = layout.by_kind("token")
    weights = layout.by_kind("weight")
    num_windows = seq_len - model.order + 1
    if model.num_positions < num_windows:
        raise ValidationError(
            f"model covers {model.num_positions} window positions, need {num_windows}")
    per_window = [_window_weight_options(model, k, smoothing)
                  for k in range(num_windows)]
    code_range = range(1 << tokens[0].width)
    members, products = [], []
    for seq in itertools.product(code_range, repeat=seq_len):
        opts = []
        feasible = True
        for k in range(num_windows):
            gram = seq[k:k + model.order]
            vals = per_window[k].get(gram)
            if vals is None:
                vals = (0,) if smoothing else ()
            if not vals:
                feasible = False
                break
            opts.append(vals)
        if not feasible:
            continue
        base = 0
        for reg, code in zip(tokens, seq):
            base |= code << reg.start
        for combo in itertools.product(*opts):
            if not _prune_ok(combo, prune_threshold, prune_window,
                             prune_exempt_zero):
                continue
            index = base
            product = 1
            for reg, v in zip(weights, combo):
                index |= v << reg.start
                product *= v
            members.append(index)
            products.append(product)
    return ValidSet(np.array(members, dtype=np.int64),
                    np.array(products, dtype=np.int64))


class SequenceResult(NamedTuple):
    """Argmax sequence with its window weights."""

    tokens: tuple
    weights: tuple
    weight_product: int


def _iter_scored_sequences(model: NgramModel, seq_len: int):
    """(tokens, per-window weights, per-window probabilities) for sequences
    whose every window pattern is stored (weight >= 1)."""
    num_windows = seq_len - model.order + 1
    tables = [{g.tokens: g for g in model.window_patterns(k)}
              for k in range(num_windows)]
    for seq in itertools.product(range(model.vocabulary.size), repeat=seq_len):
        ws, ps = [], []
        ok = True
        for k in range(num_windows):
            gram = tables[k].get(seq[k:k + model.order])
            if gram is None:
                ok = False
                break
            ws.append(gram.weight)
            ps.append(gram.probability)
        if ok:
            yield seq, tuple(ws), tuple(ps)


def max_weight_sequence(model: NgramModel, seq_len: int,
                        objective: str = "product") -> SequenceResult:
    """Argmax over valid sequences of the quantized window weights.

    objective "product" maximizes sum(log w_k) (equivalently the weight
    product); "sum" maximizes sum(w_k). Ties break to the lexicographically
    smallest token sequence.
    """
    if objective not in ("product", "sum"):
        raise ValidationError(f"objective must be 'product' or 'sum', got {objective}")
    best = None
    best_score = -math.inf
    for seq, ws, _ in _iter_scored_sequences(model, seq_len):
        score = (sum(math.log(w) for w in ws) if objective == "product"
                 else float(sum(ws)))
        if score > best_score:
            best_score = score
            best = SequenceResult(seq, ws, math.prod(ws))
    if best is None:
        raise InfeasibleModelError(
            f"no length-{seq_len} sequence has all window weights >= 1")
    return best


def max_probability_sequence(model: NgramModel, seq_len: int) -> SequenceResult:
    """Argmax of the exact (unquantized) product of window probabilities.

    Independent reference for the quantized argmax; weights reported are
    the quantized ones of the winning sequence.
    """
    best = None
    best_score = -math.inf
    for seq, ws, ps in _iter_scored_sequences(model, seq_len):
        score = sum(math.log(p) for p in ps)
        if score > best_score:
            best_score = score
            best = SequenceResult(seq, ws, math.prod(ws))
    if best is None:
        raise InfeasibleModelError(
            f"no length-{seq_len} sequence has all window probabilities > 0")
    return best
