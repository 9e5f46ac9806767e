"""Allowed-pattern catalogs: 2x2 image patches and weighted n-grams.

Patches are 4-bit tuples ordered (NW, NE, SW, SE) and may be closed under
a symmetry group of the square. N-gram patterns carry quantized weights
w = floor(C * P); a pattern with weight w contributes w ground states,
one per weight-register value k = 1..w, so ground-manifold multiplicity
encodes pattern frequency up to quantization error <= 1/C.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .encoding import RegisterLayout, Vocabulary, pixel_qubit
from .errors import ResolutionError, ValidationError

SYMMETRY_GROUPS = ("none", "rotations", "dihedral")


class ImagePattern(NamedTuple):
    """One 2x2 patch, bits ordered (NW, NE, SW, SE)."""

    nw: int
    ne: int
    sw: int
    se: int


class Window(NamedTuple):
    """A named local support; bit j of the local code = qubit support[j]."""

    name: str
    support: tuple


def rotate_patch(p: ImagePattern) -> ImagePattern:
    """90-degree clockwise rotation."""
    return ImagePattern(p.sw, p.nw, p.se, p.ne)


def reflect_patch(p: ImagePattern) -> ImagePattern:
    """Left-right mirror."""
    return ImagePattern(p.ne, p.nw, p.se, p.sw)


def close_under_symmetry(patches, symmetry: str) -> frozenset:
    """Close a patch set under the requested symmetry group of the square."""
    if symmetry not in SYMMETRY_GROUPS:
        raise ValidationError(
            f"symmetry must be one of {SYMMETRY_GROUPS}, got {symmetry!r}")
    closed = set(ImagePattern(*p) for p in patches)
    if symmetry == "none":
        return frozenset(closed)
    frontier = list(closed)
    while frontier:
        p = frontier.pop()
        images = [rotate_patch(p)]
        if symmetry == "dihedral":
            images.append(reflect_patch(p))
        for q in images:
            if q not in closed:
                closed.add(q)
                frontier.append(q)
    return frozenset(closed)


@dataclass(frozen=True)
class PatternSet:
    """Catalog of allowed patches, closed under its declared symmetry."""

    patterns: frozenset
    symmetry: str = "none"

    def __post_init__(self):
        for p in self.patterns:
            if len(p) != 4 or any(b not in (0, 1) for b in p):
                raise ValidationError(f"patch must be 4 bits, got {p}")
        closed = close_under_symmetry(self.patterns, self.symmetry)
        object.__setattr__(self, "patterns", closed)

    def __len__(self):
        return len(self.patterns)

    def __contains__(self, patch):
        return ImagePattern(*patch) in self.patterns


def extract_image_patterns(image, symmetry: str = "dihedral") -> PatternSet:
    """Catalog every 2x2 patch of a binary grid, closed under `symmetry`."""
    grid = _as_grid(image)
    rows, cols = len(grid), len(grid[0])
    if rows < 2 or cols < 2:
        raise ValidationError(f"image must be at least 2x2, got {rows}x{cols}")
    patches = set()
    for r in range(rows - 1):
        for c in range(cols - 1):
            patches.add(ImagePattern(grid[r][c], grid[r][c + 1],
                                     grid[r + 1][c], grid[r + 1][c + 1]))
    return PatternSet(frozenset(patches), symmetry)


def _as_grid(image):
    grid = [list(int(v) for v in row) for row in image]
    if not grid or any(len(row) != len(grid[0]) for row in grid):
        raise ValidationError("image rows must be nonempty and equal length")
    if any(v not in (0, 1) for row in grid for v in row):
        raise ValidationError("image must be binary (0 = white, 1 = black)")
    return grid


def image_windows(rows: int, cols: int, periodic: bool = False) -> list[Window]:
    """2x2 windows in row-major order; open boundary by default.

    With periodic=True the windows wrap in both directions, giving
    rows*cols windows instead of (rows-1)*(cols-1).
    """
    if rows < 2 or cols < 2:
        raise ValidationError(f"need at least a 2x2 grid, got {rows}x{cols}")
    windows = []
    r_range = range(rows) if periodic else range(rows - 1)
    c_range = range(cols) if periodic else range(cols - 1)
    for r in r_range:
        for c in c_range:
            r2, c2 = (r + 1) % rows, (c + 1) % cols
            support = (pixel_qubit(rows, cols, r, c),
                       pixel_qubit(rows, cols, r, c2),
                       pixel_qubit(rows, cols, r2, c),
                       pixel_qubit(rows, cols, r2, c2))
            windows.append(Window(f"g{r}_{c}", support))
    return windows


def patch_code(patch) -> int:
    """Local 4-bit code of a patch on a window's (NW, NE, SW, SE) support."""
    p = ImagePattern(*patch)
    return p.nw | (p.ne << 1) | (p.sw << 2) | (p.se << 3)


def pattern_states(patterns) -> list[int]:
    """Sorted local window codes of an image patch catalog."""
    patches = patterns.patterns if isinstance(patterns, PatternSet) else patterns
    return sorted(patch_code(p) for p in patches)


class WeightedNgram(NamedTuple):
    """An n-gram pattern with its estimated probability and quantized weight."""

    tokens: tuple
    probability: float
    weight: int


@dataclass(frozen=True)
class NgramModel:
    """Per-window-position conditional tables with quantized weights.

    Position k (0-based) holds P(x_{k+n} | x_{k+1}..x_{k+n-1}) estimated
    by relative frequency over the corpus items long enough to reach it.
    """

    order: int
    vocabulary: Vocabulary
    resolution: int
    tables: tuple  # per position: tuple of (context tokens, next token, probability)

    @property
    def num_positions(self) -> int:
        return len(self.tables)

    def window_patterns(self, position: int) -> list[WeightedNgram]:
        """Stored patterns at a window position (weight >= 1 only)."""
        if not 0 <= position < self.num_positions:
            raise ValidationError(
                f"window position {position} outside 0..{self.num_positions - 1}")
        out = []
        for context, nxt, prob in self.tables[position]:
            w = int(np.floor(self.resolution * prob))
            if w >= 1:
                out.append(WeightedNgram(context + (nxt,), prob, w))
        return sorted(out)

    def probability(self, position: int, tokens) -> float:
        """Conditional probability of an n-gram at a position (0 if unseen)."""
        tokens = tuple(tokens)
        for context, nxt, prob in self.tables[position]:
            if context + (nxt,) == tokens:
                return prob
        return 0.0


def build_ngram_model(corpus, order: int, resolution: int,
                      vocabulary: Vocabulary) -> NgramModel:
    """Estimate per-position conditionals by relative frequency and quantize.

    Patterns whose floor(C * P) is 0 are dropped from the stored sets;
    they stay reachable only through the smoothing term.
    """
    if order < 1:
        raise ValidationError(f"order must be >= 1, got {order}")
    if resolution < 2:
        raise ValidationError(f"resolution must be >= 2, got {resolution}")
    sequences = []
    for item in corpus:
        seq = tuple(vocabulary.index(t) for t in item)
        sequences.append(seq)
    if not sequences:
        raise ValidationError("corpus is empty")
    max_pos = max(len(s) for s in sequences) - order + 1
    if max_pos < 1:
        raise ValidationError(
            f"no corpus item is long enough for order {order}")
    tables = []
    for pos in range(max_pos):
        gram_counts = Counter()
        context_counts = Counter()
        for seq in sequences:
            if len(seq) < pos + order:
                continue
            gram = seq[pos:pos + order]
            gram_counts[gram] += 1
            context_counts[gram[:-1]] += 1
        entries = []
        for gram, count in sorted(gram_counts.items()):
            prob = count / context_counts[gram[:-1]]
            entries.append((gram[:-1], gram[-1], prob))
        tables.append(tuple(entries))
    return NgramModel(order, vocabulary, resolution, tuple(tables))


def ngram_windows(layout: RegisterLayout, order: int) -> list[Window]:
    """One window per position: its n token registers plus its weight register."""
    tokens = layout.by_kind("token")
    weights = layout.by_kind("weight")
    if len(weights) != len(tokens) - order + 1:
        raise ValidationError("layout does not match the n-gram order")
    windows = []
    for k, wreg in enumerate(weights):
        support = []
        for reg in tokens[k:k + order]:
            support.extend(reg.qubits)
        support.extend(wreg.qubits)
        windows.append(Window(f"H{k + 1}", tuple(support)))
    return windows


def weighted_pattern_states(ngrams, token_bits: int, weight_bits: int) -> list[int]:
    """Local window codes of weighted patterns: one state per k = 1..w.

    The weight register value 0 is reserved for the smoothing label, so
    stored patterns start at k = 1.
    """
    states = []
    for gram in ngrams:
        if gram.weight >= (1 << weight_bits):
            raise ResolutionError(
                f"weight {gram.weight} of {gram.tokens} needs more than "
                f"{weight_bits} weight bits")
        base = 0
        for j, token in enumerate(gram.tokens):
            if not 0 <= token < (1 << token_bits):
                raise ValidationError(f"token code {token} exceeds register width")
            base |= token << (j * token_bits)
        shift = len(gram.tokens) * token_bits
        for k in range(1, gram.weight + 1):
            states.append(base | (k << shift))
    return sorted(states)


def quantize_weight(probability: float, resolution: int) -> int:
    """w = floor(C * P); probabilities below 1/C quantize to 0."""
    if not 0.0 <= probability <= 1.0:
        raise ValidationError(f"probability {probability} outside [0, 1]")
    return int(np.floor(resolution * probability))


def load_pbm(path) -> list[list[int]]:
    """Read a plain (P1) portable bitmap: 1 = black, 0 = white."""
    with open(path, encoding="ascii") as fh:
        tokens = []
        for line in fh:
            line = line.split("#", 1)[0]
            tokens.extend(line.split())
    if not tokens or tokens[0] != "P1":
        raise ValidationError(f"{path}: not a plain PBM (P1) file")
    if len(tokens) < 3:
        raise ValidationError(f"{path}: missing PBM dimensions")
    cols, rows = int(tokens[1]), int(tokens[2])
    bits = [int(t) for t in tokens[3:]]
    if len(bits) != rows * cols or any(b not in (0, 1) for b in bits):
        raise ValidationError(f"{path}: expected {rows * cols} binary pixels")
    return [bits[r * cols:(r + 1) * cols] for r in range(rows)]


def save_pbm(path, grid) -> None:
    """Write a binary grid as a plain (P1) portable bitmap."""
    grid = _as_grid(grid)
    rows, cols = len(grid), len(grid[0])
    lines = [f"P1\n{cols} {rows}\n"]
    for row in grid:
        lines.append(" ".join(str(v) for v in row) + "\n")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.writelines(lines)


def load_corpus(path, vocabulary: Vocabulary, chars: bool = False) -> list[tuple]:
    """Sequence file: one sequence per line, whitespace-separated tokens.

    With chars=True each line is split into single characters instead
    (convenient for letter-level models over plain word lists).
    """
    corpus = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            tokens = list(line) if chars else line.split()
            for t in tokens:
                vocabulary.index(t)  # raises on out-of-vocabulary input
            corpus.append(tuple(tokens))
    if not corpus:
        raise ValidationError(f"{path}: corpus file is empty")
    return corpus


def image_pattern_density(images) -> dict:
    """Relative frequency of each 2x2 patch across all windows of all images."""
    counts = Counter()
    total = 0
    for image in images:
        grid = _as_grid(image)
        rows, cols = len(grid), len(grid[0])
        if rows < 2 or cols < 2:
            raise ValidationError("images must be at least 2x2")
        for r in range(rows - 1):
            for c in range(cols - 1):
                counts[ImagePattern(grid[r][c], grid[r][c + 1],
                                    grid[r + 1][c], grid[r + 1][c + 1])] += 1
                total += 1
    if total == 0:
        raise ValidationError("no windows counted")
    return {p: n / total for p, n in sorted(counts.items())}


def ngram_pattern_density(sequences, order: int) -> dict:
    """Relative frequency of each n-gram across all windows of all sequences."""
    counts = Counter()
    total = 0
    for seq in sequences:
        seq = tuple(seq)
        if len(seq) < order:
            raise ValidationError(f"sequence shorter than order {order}: {seq}")
        for k in range(len(seq) - order + 1):
            counts[seq[k:k + order]] += 1
            total += 1
    return {g: n / total for g, n in sorted(counts.items())}
