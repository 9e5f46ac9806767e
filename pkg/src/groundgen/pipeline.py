"""End-to-end orchestration: encode, extract patterns, build the global
Hamiltonian, solve, sample, decode, and write run artifacts.

A run is fully described by a RunConfig; identical configs (including the
seed) produce byte-identical artifacts.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import hamiltonian as ham
from . import oracle as orc
from . import patterns as pat
from . import solvers as sol
from . import statevec as sv
from .encoding import (RegisterLayout, Vocabulary, image_layout, load_vocabulary,
                       ngram_layout)
from .errors import InfeasibleModelError, ValidationError

# Annealing time at which 200 first-order Trotter steps hold the
# ground-manifold overlap above 0.99 on the benchmark grids (smallest
# power of two that clears the bound; see tests/test_acceptance.py).
DEFAULT_ANNEAL_TIME = 128.0
DEFAULT_ANNEAL_STEPS = 200


@dataclass
class RunConfig:
    """Everything a generate run needs; serializable and re-loadable."""

    task: str
    seed: int
    output_dir: str = "groundgen-out"
    shots: int = 10000
    e_g: float = 1.0
    solver: str = "adiabatic"  # adiabatic | vqe | grover
    solver_options: dict = field(default_factory=dict)
    # image task
    image_input: str | None = None
    rows: int = 4
    cols: int = 4
    symmetry: str = "dihedral"
    periodic: bool = False
    # text task
    vocabulary: str | None = None
    corpus: str | None = None
    chars: bool = False
    order: int = 2
    seq_len: int = 3
    resolution: int = 8
    smoothing: bool = False
    prune_threshold: float | None = None
    prune_penalty: float | None = None
    prune_window: int = 2
    prune_exempt_smoothed: bool = False

    def __post_init__(self):
        if self.task not in ("image", "text"):
            raise ValidationError(f"task must be 'image' or 'text', got {self.task!r}")
        if self.solver not in ("adiabatic", "vqe", "grover"):
            raise ValidationError(f"unknown solver {self.solver!r}")
        if self.e_g <= 0:
            raise ValidationError(f"e_g must be positive, got {self.e_g}")
        if self.shots < 1:
            raise ValidationError(f"shots must be >= 1, got {self.shots}")

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        doc = json.loads(text)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)


@dataclass
class ModelBundle:
    """Model artifacts shared by the build, solve and verify stages."""

    layout: RegisterLayout
    h_f: ham.DiagonalHamiltonian
    valid_set: orc.ValidSet
    constraints: list
    ground_energy: float
    vocabulary: Vocabulary | None = None
    pattern_set: pat.PatternSet | None = None
    model: pat.NgramModel | None = None
    windows: list = field(default_factory=list)


def build_image_model(config: RunConfig, check_feasible: bool = True) -> ModelBundle:
    """Pattern extraction and Hamiltonian assembly for the image task."""
    if config.image_input is None:
        raise ValidationError("image task needs image_input")
    grid = pat.load_pbm(config.image_input)
    catalog = pat.extract_image_patterns(grid, config.symmetry)
    if len(catalog) == 0:
        raise InfeasibleModelError("empty pattern catalog")
    layout = image_layout(config.rows, config.cols)
    windows = pat.image_windows(config.rows, config.cols, config.periodic)
    states = pat.pattern_states(catalog)
    table = ham.spectral_parent(states, 4, config.e_g)
    h_f = ham.assemble_global(table, windows, layout.total_qubits, config.e_g)
    valid = orc.enumerate_valid_images(config.rows, config.cols, catalog,
                                       config.periodic)
    if check_feasible and len(valid) == 0:
        raise InfeasibleModelError(
            "no output image satisfies every window constraint")
    constraints = [sol.OracleConstraint(w, states) for w in windows]
    ground_energy = -config.e_g * len(windows)
    return ModelBundle(layout, h_f, valid, constraints, ground_energy,
                       pattern_set=catalog, windows=windows)


def build_text_model(config: RunConfig, check_feasible: bool = True) -> ModelBundle:
    """N-gram model estimation and Hamiltonian assembly for the text task."""
    if config.vocabulary is None or config.corpus is None:
        raise ValidationError("text task needs vocabulary and corpus paths")
    vocab = load_vocabulary(config.vocabulary)
    corpus = pat.load_corpus(config.corpus, vocab, config.chars)
    model = pat.build_ngram_model(corpus, config.order, config.resolution, vocab)
    layout = ngram_layout(config.seq_len, config.order, vocab.size,
                          config.resolution)
    windows = pat.ngram_windows(layout, config.order)
    token_bits = vocab.width
    weight_bits = layout.by_kind("weight")[0].width
    num_windows = len(windows)
    if model.num_positions < num_windows:
        raise InfeasibleModelError(
            f"corpus covers {model.num_positions} window positions, "
            f"need {num_windows}")

    tables = []
    constraints = []
    for k, window in enumerate(windows):
        grams = model.window_patterns(k)
        codes = pat.weighted_pattern_states(grams, token_bits, weight_bits)
        allowed = set(codes)
        width = len(window.support)
        table = np.zeros(1 << width, dtype=np.float64)
        if codes:
            table = ham.spectral_parent(codes, width, config.e_g)
        if config.smoothing:
            allowed.update(c for c in range(1 << width)
                           if (c >> (config.order * token_bits)) == 0)
        if not allowed:
            raise InfeasibleModelError(
                f"window {window.name} admits no pattern and smoothing is off")
        tables.append(table)
        constraints.append(sol.OracleConstraint(window, sorted(allowed)))

    h_f = ham.assemble_global(tables, windows, layout.total_qubits, config.e_g)
    if config.smoothing:
        h_f = h_f.with_windows(ham.smoothing_terms(layout, config.e_g))
    if config.prune_threshold is not None:
        penalty = (config.prune_penalty if config.prune_penalty is not None
                   else 2.0 * config.e_g)
        prune = ham.pruning_terms(layout, penalty, config.prune_threshold,
                                  config.prune_window,
                                  config.prune_exempt_smoothed)
        h_f = h_f.with_windows(prune)
        constraints.extend(_pruning_constraints(layout, config))
    valid = orc.enumerate_valid_sequences(
        model, config.seq_len, smoothing=config.smoothing,
        prune_threshold=config.prune_threshold,
        prune_window=config.prune_window,
        prune_exempt_zero=config.prune_exempt_smoothed)
    if check_feasible and len(valid) == 0:
        raise InfeasibleModelError("ground manifold is empty under these flags")
    ground_energy = -config.e_g * num_windows
    return ModelBundle(layout, h_f, valid, constraints, ground_energy,
                       vocabulary=vocab, model=model, windows=windows)


def _pruning_constraints(layout: RegisterLayout, config: RunConfig) -> list:
    """Acceptance sets of the pruning windows (codes with product >= theta)."""
    weight_regs = layout.by_kind("weight")
    size = config.prune_window
    num_windows = len(weight_regs) - size + 1
    thresholds = (list(config.prune_threshold)
                  if np.iterable(config.prune_threshold)
                  else [config.prune_threshold] * num_windows)
    out = []
    for l in range(num_windows):
        regs = weight_regs[l:l + size]
        support = tuple(q for r in regs for q in r.qubits)
        widths = [r.width for r in regs]
        allowed = []
        for code in range(1 << sum(widths)):
            product, rest = 1, code
            for width in widths:
                value = rest & ((1 << width) - 1)
                rest >>= width
                if config.prune_exempt_smoothed and value == 0:
                    continue
                product *= value
            if product >= thresholds[l]:
                allowed.append(code)
        out.append(sol.OracleConstraint(pat.Window(f"M{l + 1}", support), allowed))
    return out


def build_model(config: RunConfig, check_feasible: bool = True) -> ModelBundle:
    if config.task == "image":
        return build_image_model(config, check_feasible)
    return build_text_model(config, check_feasible)


def run_solver(bundle: ModelBundle, config: RunConfig):
    """Dispatch to the configured solver; returns (state, trace, converged)."""
    opts = dict(config.solver_options)
    ground_set = bundle.valid_set.members if len(bundle.valid_set) else None
    if config.solver == "adiabatic":
        n = bundle.h_f.num_qubits
        record_every = opts.pop("record_every",
                                20 if n > ham.DENSE_MAX_QUBITS else 1)
        cfg = sol.AdiabaticConfig(
            total_time=opts.pop("total_time", DEFAULT_ANNEAL_TIME),
            steps=opts.pop("steps", DEFAULT_ANNEAL_STEPS),
            order=opts.pop("order", 1),
            record_every=record_every)
        _reject_extras(opts)
        state, trace = sol.adiabatic_solve(bundle.h_f, cfg, ground_set=ground_set)
        return state, trace, True
    if config.solver == "vqe":
        cfg = sol.VariationalConfig(
            layers=opts.pop("layers", 4),
            max_evals=opts.pop("max_evals", 2000),
            seed=opts.pop("seed", config.seed),
            optimizer=opts.pop("optimizer", "rotosolve"),
            tol=opts.pop("tol", 1e-6))
        _reject_extras(opts)
        result = sol.variational_solve(bundle.h_f, cfg, ground_set=ground_set,
                                       ground_energy=bundle.ground_energy)
        return result.state, result.trace, result.converged
    backend = opts.pop("backend", "predicate")
    cfg = sol.GroverConfig(
        policy=opts.pop("policy", "optimal"),
        iterations=opts.pop("iterations", 0),
        max_iterations=opts.pop("max_iterations", 64),
        energy_tol=opts.pop("energy_tol", 1e-6))
    _reject_extras(opts)
    oracle = sol.build_grover_oracle(bundle.constraints,
                                     bundle.h_f.num_qubits, backend)
    state, trace = sol.grover_solve(oracle, cfg, monitor=bundle.h_f,
                                    ground_set=ground_set,
                                    ground_energy=bundle.ground_energy)
    return state, trace, True


def _reject_extras(opts: dict) -> None:
    if opts:
        raise ValidationError(f"unknown solver options: {sorted(opts)}")


def index_to_grid(index: int, rows: int, cols: int) -> tuple:
    """Basis index -> image grid (tuple of row tuples)."""
    return tuple(tuple((index >> (r * cols + c)) & 1 for c in range(cols))
                 for r in range(rows))


def grid_to_index(grid) -> int:
    index = 0
    q = 0
    for row in grid:
        for v in row:
            index |= int(v) << q
            q += 1
    return index


def index_to_tokens(index: int, layout: RegisterLayout,
                    vocabulary: Vocabulary) -> tuple:
    """Basis index -> (token strings, weight register values)."""
    tokens, weights = [], []
    for reg in layout.registers:
        value = (index >> reg.start) & ((1 << reg.width) - 1)
        if reg.kind == "token":
            tokens.append(vocabulary.token(value))
        elif reg.kind == "weight":
            weights.append(value)
    return tuple(tokens), tuple(weights)


@dataclass
class GeneratedSample:
    """One decoded output with its empirical probability."""

    output: tuple
    count: int
    probability: float
    weight_groups: tuple = ()  # ((weight values, count), ...) for text


@dataclass
class GeneratedEnsemble:
    """Decoded measurement outcomes of a generate run."""

    samples: list
    counts: sv.MeasurementCounts


def decode_outputs(counts: sv.MeasurementCounts, layout: RegisterLayout,
                   vocabulary: Vocabulary | None = None,
                   rows: int | None = None,
                   cols: int | None = None) -> GeneratedEnsemble:
    """Group measured indices by decoded output.

    Weight registers are marginalized: indices differing only in weight
    values aggregate into one sample with per-weight annotations.
    """
    grouped: dict = {}
    for index, count in counts.counts.items():
        if vocabulary is not None:
            output, weights = index_to_tokens(index, layout, vocabulary)
        else:
            if rows is None or cols is None:
                raise ValidationError("image decoding needs rows and cols")
            output, weights = index_to_grid(index, rows, cols), ()
        bucket = grouped.setdefault(output, {})
        bucket[weights] = bucket.get(weights, 0) + count
    samples = []
    for output, buckets in grouped.items():
        total = sum(buckets.values())
        groups = tuple(sorted(buckets.items())) if vocabulary is not None else ()
        samples.append(GeneratedSample(output, total,
                                       total / counts.total_shots, groups))
    samples.sort(key=lambda s: (-s.count, s.output))
    return GeneratedEnsemble(samples, counts)


def run_generate(config: RunConfig) -> GeneratedEnsemble:
    """Execute the full pipeline and write artifacts into output_dir.

    Artifacts: resolved_config.json, hamiltonian.json, trace.csv,
    counts.json, validset.txt, report.json, and the decoded outputs
    (outputs/*.pbm with manifest.txt, or outputs.txt).
    """
    bundle = build_model(config)
    state, trace, converged = run_solver(bundle, config)
    counts = sv.sample(state, config.shots, config.seed)
    if config.task == "image":
        ensemble = decode_outputs(counts, bundle.layout,
                                  rows=config.rows, cols=config.cols)
    else:
        ensemble = decode_outputs(counts, bundle.layout, bundle.vocabulary)
    _write_artifacts(config, bundle, state, trace, converged, counts, ensemble)
    return ensemble


def _write_artifacts(config, bundle, state, trace, converged, counts, ensemble):
    out = config.output_dir
    os.makedirs(out, exist_ok=True)
    _write(out, "resolved_config.json", config.to_json() + "\n")
    _write(out, "hamiltonian.json", ham.hamiltonian_to_json(bundle.h_f) + "\n")
    _write(out, "trace.csv", trace.to_csv())
    _write(out, "counts.json", counts_to_json(counts) + "\n")
    _write(out, "validset.txt", render_valid_set(bundle, config))

    sampled = np.fromiter(counts.counts.keys(), dtype=np.int64,
                          count=len(counts.counts))
    weights = np.fromiter(counts.counts.values(), dtype=np.int64,
                          count=len(counts.counts))
    valid_mask = bundle.valid_set.contains(sampled)
    valid_shots = int(weights[valid_mask].sum())
    covered = int(valid_mask.sum())
    report = {
        "task": config.task,
        "solver": config.solver,
        "converged": bool(converged),
        "num_qubits": bundle.layout.total_qubits,
        "ground_energy": bundle.ground_energy,
        "final_energy": float(trace.final("energy")),
        "final_overlap": float(trace.final("overlap")),
        "valid_set_size": len(bundle.valid_set),
        "validity_fraction": valid_shots / counts.total_shots,
        "valid_coverage": covered / max(len(bundle.valid_set), 1),
        "distinct_outputs": len(ensemble.samples),
    }
    _write(out, "report.json", json.dumps(report, indent=2, sort_keys=True) + "\n")

    if config.task == "image":
        outdir = os.path.join(out, "outputs")
        os.makedirs(outdir, exist_ok=True)
        manifest = []
        for i, s in enumerate(ensemble.samples):
            name = f"out_{i:04d}.pbm"
            pat.save_pbm(os.path.join(outdir, name), s.output)
            manifest.append(f"{name}\t{s.count}\t{s.probability:.6f}")
        _write(out, "manifest.txt", "\n".join(manifest) + "\n")
    else:
        lines = []
        for s in ensemble.samples:
            word = " ".join(s.output)
            annot = ";".join(",".join(str(v) for v in ws) + f":{c}"
                             for ws, c in s.weight_groups)
            lines.append(f"{word}\t{annot}\t{s.count}\t{s.probability:.6f}")
        _write(out, "outputs.txt", "\n".join(lines) + "\n")


def _write(out: str, name: str, text: str) -> None:
    with open(os.path.join(out, name), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def counts_to_json(counts: sv.MeasurementCounts) -> str:
    doc = {"total_shots": counts.total_shots,
           "counts": {str(k): counts.counts[k] for k in sorted(counts.counts)}}
    return json.dumps(doc, indent=2, sort_keys=True)


def counts_from_json(text: str) -> sv.MeasurementCounts:
    doc = json.loads(text)
    return sv.MeasurementCounts({int(k): int(v) for k, v in doc["counts"].items()},
                                doc["total_shots"])


def render_valid_set(bundle: ModelBundle, config: RunConfig) -> str:
    """Sorted index listing with decoded rendering per member."""
    lines = []
    for index, weight in zip(bundle.valid_set.members, bundle.valid_set.weights):
        index = int(index)
        if config.task == "image":
            grid = index_to_grid(index, config.rows, config.cols)
            rendering = "|".join("".join(str(v) for v in row) for row in grid)
        else:
            tokens, weights = index_to_tokens(index, bundle.layout,
                                              bundle.vocabulary)
            rendering = " ".join(tokens) + " [" + ",".join(
                str(v) for v in weights) + "]"
        lines.append(f"{index}\t{rendering}\t{int(weight)}")
    return "\n".join(lines) + "\n"
