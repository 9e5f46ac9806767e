"""Register layouts: bijective maps between semantic units and qubit ranges.

Image task: one qubit per pixel (|0> white, |1> black), qubit index =
row * cols + col. Text task: T token registers of ceil(log2 V) qubits and
T-n+1 weight registers of ceil(log2 C) qubits, each weight register
placed right after the last token of its window (t1 t2 w1 t3 w2 ...).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import CapacityError, LayoutError, ValidationError

MAX_QUBITS = 25
OOV_FORMAT = "<oov:{code}>"


@dataclass(frozen=True)
class Register:
    """A named contiguous qubit range holding one semantic slot."""

    name: str
    start: int
    width: int
    kind: str  # pixel | token | weight

    def __post_init__(self):
        if self.width < 1:
            raise ValidationError(f"register {self.name} has width {self.width}")
        if self.kind not in ("pixel", "token", "weight"):
            raise ValidationError(f"unknown register kind {self.kind!r}")

    @property
    def qubits(self) -> range:
        return range(self.start, self.start + self.width)


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered registers covering qubits 0..total_qubits-1 exactly once."""

    registers: tuple
    total_qubits: int

    def __post_init__(self):
        covered = []
        for reg in self.registers:
            covered.extend(reg.qubits)
        if sorted(covered) != list(range(self.total_qubits)):
            raise LayoutError("registers must cover 0..total_qubits-1 disjointly")

    def register(self, name: str) -> Register:
        for reg in self.registers:
            if reg.name == name:
                return reg
        raise LayoutError(f"no register named {name!r}")

    def by_kind(self, kind: str) -> list[Register]:
        return [r for r in self.registers if r.kind == kind]


def image_layout(rows: int, cols: int) -> RegisterLayout:
    """One single-qubit pixel register per cell, row-major."""
    if rows < 1 or cols < 1:
        raise ValidationError(f"image must be at least 1x1, got {rows}x{cols}")
    if rows * cols > MAX_QUBITS:
        raise CapacityError(
            f"{rows}x{cols} image needs {rows * cols} qubits (max {MAX_QUBITS})")
    regs = tuple(Register(f"px{r}_{c}", r * cols + c, 1, "pixel")
                 for r in range(rows) for c in range(cols))
    return RegisterLayout(regs, rows * cols)


def pixel_qubit(rows: int, cols: int, r: int, c: int) -> int:
    if not (0 <= r < rows and 0 <= c < cols):
        raise ValidationError(f"pixel ({r},{c}) outside {rows}x{cols} grid")
    return r * cols + c


def token_width(vocab_size: int) -> int:
    if vocab_size < 1:
        raise ValidationError("vocabulary must be nonempty")
    return max(1, math.ceil(math.log2(vocab_size)))


def ngram_layout(seq_len: int, order: int, vocab_size: int,
                 resolution: int) -> RegisterLayout:
    """Token and weight registers for a length-T sequence with T-n+1 windows."""
    if order < 1 or seq_len < order:
        raise ValidationError(
            f"need sequence length >= order >= 1, got T={seq_len}, n={order}")
    m = token_width(vocab_size)
    if resolution < 2:
        raise ValidationError(f"weight resolution must be >= 2, got {resolution}")
    mw = max(1, math.ceil(math.log2(resolution)))
    num_windows = seq_len - order + 1
    total = seq_len * m + num_windows * mw
    if total > MAX_QUBITS:
        raise CapacityError(
            f"layout needs {total} qubits ({seq_len} tokens x {m} + "
            f"{num_windows} weights x {mw}); max {MAX_QUBITS}")
    regs = []
    cursor = 0
    for j in range(seq_len):
        regs.append(Register(f"t{j + 1}", cursor, m, "token"))
        cursor += m
        window = j - order + 1
        if window >= 0:
            regs.append(Register(f"w{window + 1}", cursor, mw, "weight"))
            cursor += mw
    return RegisterLayout(tuple(regs), total)


def encode_basis(layout: RegisterLayout, assignment: dict) -> int:
    """Pack register values into a basis index (bit j of a value lands on
    qubit start+j)."""
    index = 0
    for name, value in assignment.items():
        reg = layout.register(name)
        value = int(value)
        if not 0 <= value < (1 << reg.width):
            raise ValidationError(
                f"value {value} does not fit register {name} ({reg.width} bits)")
        index |= value << reg.start
    return index


def decode_basis(layout: RegisterLayout, index: int) -> dict:
    """Unpack a basis index into per-register values (inverse of encode_basis)."""
    if not 0 <= index < (1 << layout.total_qubits):
        raise ValidationError(f"index {index} outside {layout.total_qubits} qubits")
    return {reg.name: (index >> reg.start) & ((1 << reg.width) - 1)
            for reg in layout.registers}


@dataclass(frozen=True)
class Vocabulary:
    """Ordered unique tokens; index = position, width = ceil(log2 V) bits."""

    entries: tuple

    def __post_init__(self):
        entries = tuple(str(t) for t in self.entries)
        if len(set(entries)) != len(entries):
            raise ValidationError("vocabulary entries must be unique")
        if not entries:
            raise ValidationError("vocabulary must be nonempty")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(entries)})

    @property
    def size(self) -> int:
        return len(self.entries)

    @property
    def width(self) -> int:
        return token_width(self.size)

    def index(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise ValidationError(f"token {token!r} not in vocabulary") from None

    def token(self, code: int) -> str:
        """Decode a register value; out-of-vocabulary codes get a sentinel.

        Solver outputs may transiently populate unused codepoints, so
        decoding never fails on them.
        """
        if 0 <= code < self.size:
            return self.entries[code]
        if 0 <= code < (1 << self.width):
            return OOV_FORMAT.format(code=code)
        raise ValidationError(f"code {code} outside {self.width}-bit register")

    def is_oov(self, code: int) -> bool:
        return not 0 <= code < self.size


def load_vocabulary(path) -> Vocabulary:
    """UTF-8 file, one token per line, line number = token index."""
    with open(path, encoding="utf-8") as fh:
        entries = [line.strip() for line in fh if line.strip()]
    return Vocabulary(tuple(entries))
