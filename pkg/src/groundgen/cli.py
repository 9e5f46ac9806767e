"""Command-line interface.

Subcommands: extract, build, spectrum, solve, sample, verify, generate.
Exit codes: 0 success, 2 validation error, 3 capacity error, 4 infeasible
model, 5 solver did not converge.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from . import hamiltonian as ham
from . import oracle as orc
from . import pipeline as pl
from . import solvers as sol
from . import statevec as sv
from .errors import (CapacityError, GroundgenError, InfeasibleModelError,
                     ValidationError)

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CAPACITY = 3
EXIT_INFEASIBLE = 4
EXIT_NON_CONVERGED = 5


def _add_config_args(p: argparse.ArgumentParser, seed_required: bool = False):
    p.add_argument("--config", help="JSON run config; flags override its fields")
    p.add_argument("--task", choices=["image", "text"])
    p.add_argument("--seed", type=int, required=seed_required)
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--shots", type=int)
    p.add_argument("--e-g", dest="e_g", type=float)
    p.add_argument("--solver", choices=["adiabatic", "vqe", "grover"])
    p.add_argument("--solver-options", dest="solver_options",
                   help="JSON object, e.g. '{\"total_time\": 32.0}'")
    # image task
    p.add_argument("--image-input", dest="image_input")
    p.add_argument("--rows", type=int)
    p.add_argument("--cols", type=int)
    p.add_argument("--symmetry", choices=["none", "rotations", "dihedral"])
    p.add_argument("--periodic", action="store_true", default=None)
    # text task
    p.add_argument("--vocabulary")
    p.add_argument("--corpus")
    p.add_argument("--chars", action="store_true", default=None)
    p.add_argument("--order", type=int)
    p.add_argument("--seq-len", dest="seq_len", type=int)
    p.add_argument("--resolution", type=int)
    p.add_argument("--smoothing", action="store_true", default=None)
    p.add_argument("--prune-threshold", dest="prune_threshold", type=float)
    p.add_argument("--prune-penalty", dest="prune_penalty", type=float)
    p.add_argument("--prune-window", dest="prune_window", type=int)
    p.add_argument("--prune-exempt-smoothed", dest="prune_exempt_smoothed",
                   action="store_true", default=None)


def _resolve_config(args) -> pl.RunConfig:
    doc = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
    field_names = {f.name for f in dataclasses.fields(pl.RunConfig)}
    for name in field_names:
        value = getattr(args, name, None)
        if value is not None:
            doc[name] = value
    if isinstance(doc.get("solver_options"), str):
        doc["solver_options"] = json.loads(doc["solver_options"])
    if "task" not in doc:
        raise ValidationError("task is required (flag --task or config file)")
    if "seed" not in doc:
        raise ValidationError("seed is required (flag --seed or config file)")
    unknown = set(doc) - field_names
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")
    return pl.RunConfig(**doc)


def _outdir(config: pl.RunConfig) -> str:
    os.makedirs(config.output_dir, exist_ok=True)
    return config.output_dir


def cmd_extract(args) -> int:
    config = _resolve_config(args)
    out = _outdir(config)
    if config.task == "image":
        bundle = pl.build_image_model(config, check_feasible=False)
        doc = {"task": "image", "symmetry": config.symmetry,
               "patterns": sorted(list(p) for p in bundle.pattern_set.patterns)}
        path = os.path.join(out, "patterns.json")
    else:
        bundle = pl.build_text_model(config, check_feasible=False)
        model = bundle.model
        doc = {"task": "text", "order": model.order,
               "resolution": model.resolution,
               "vocab_size": model.vocabulary.size,
               "positions": [
                   [[list(ctx), nxt, prob,
                     int(np.floor(model.resolution * prob))]
                    for ctx, nxt, prob in table]
                   for table in model.tables]}
        path = os.path.join(out, "model.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_build(args) -> int:
    config = _resolve_config(args)
    out = _outdir(config)
    bundle = pl.build_model(config, check_feasible=False)
    path = os.path.join(out, "hamiltonian.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(ham.hamiltonian_to_json(bundle.h_f) + "\n")
    print(f"wrote {path} ({bundle.layout.total_qubits} qubits, "
          f"{len(bundle.h_f.windows)} windows)")
    return EXIT_OK


def cmd_spectrum(args) -> int:
    config = _resolve_config(args)
    out = _outdir(config)
    bundle = pl.build_model(config, check_feasible=False)
    report = ham.diagonal_spectrum(bundle.h_f)
    doc = {"ground_energy": report.ground_energy, "gap": report.gap,
           "ground_count": report.ground_count}
    if report.ground_set is not None and report.ground_set.size <= 65536:
        doc["ground_set"] = [int(i) for i in report.ground_set]
    if report.description:
        doc["description"] = report.description
    path = os.path.join(out, "spectrum.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"ground energy {report.ground_energy:g}, gap {report.gap:g}, "
          f"{report.ground_count} ground states")
    return EXIT_OK


def cmd_solve(args) -> int:
    config = _resolve_config(args)
    out = _outdir(config)
    if args.hamiltonian:
        with open(args.hamiltonian, encoding="utf-8") as fh:
            h_f, _ = ham.hamiltonian_from_json(fh.read())
        report = ham.diagonal_spectrum(h_f)
        bundle = pl.ModelBundle(
            layout=None, h_f=h_f,
            valid_set=orc.ValidSet(report.ground_set,
                                   np.ones_like(report.ground_set))
            if report.ground_set is not None
            else orc.ValidSet(np.array([], dtype=np.int64),
                              np.array([], dtype=np.int64)),
            constraints=[], ground_energy=report.ground_energy)
        if config.solver == "grover":
            raise ValidationError(
                "grover needs window constraints; solve from --config instead")
        state, trace, converged = pl.run_solver(bundle, config)
        n = h_f.num_qubits
    else:
        bundle = pl.build_model(config)
        state, trace, converged = pl.run_solver(bundle, config)
        n = bundle.layout.total_qubits
    with open(os.path.join(out, "trace.csv"), "w", encoding="utf-8",
              newline="\n") as fh:
        fh.write(trace.to_csv())
    if n <= ham.DENSE_MAX_QUBITS:
        np.save(os.path.join(out, "state.npy"), state.amplitudes)
    doc = {"solver": config.solver, "num_qubits": n,
           "converged": bool(converged),
           "final_energy": float(trace.final("energy")),
           "final_overlap": float(trace.final("overlap"))}
    with open(os.path.join(out, "solve.json"), "w", encoding="utf-8",
              newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"final energy {doc['final_energy']:.6g}, "
          f"overlap {doc['final_overlap']:.6g}")
    return EXIT_OK if converged else EXIT_NON_CONVERGED


def cmd_sample(args) -> int:
    amps = np.load(args.state)
    n = int(amps.size).bit_length() - 1
    state = sv.StateVector(n, amps)
    counts = sv.sample(state, args.shots, args.seed)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(pl.counts_to_json(counts) + "\n")
    print(f"wrote {args.out} ({len(counts.counts)} distinct outcomes)")
    return EXIT_OK


def cmd_verify(args) -> int:
    config = _resolve_config(args)
    out = _outdir(config)
    bundle = pl.build_model(config)
    with open(args.counts, encoding="utf-8") as fh:
        counts = pl.counts_from_json(fh.read())
    sampled = np.fromiter(counts.counts.keys(), dtype=np.int64,
                          count=len(counts.counts))
    shots = np.fromiter(counts.counts.values(), dtype=np.int64,
                        count=len(counts.counts))
    mask = bundle.valid_set.contains(sampled)
    doc = {
        "valid_set_size": len(bundle.valid_set),
        "distinct_sampled": int(sampled.size),
        "validity_fraction": float(shots[mask].sum() / counts.total_shots),
        "valid_coverage": float(mask.sum() / max(len(bundle.valid_set), 1)),
        "invalid_indices": [int(i) for i in sampled[~mask][:100]],
    }
    if config.task == "text":
        best = orc.max_weight_sequence(bundle.model, config.seq_len)
        by_sum = orc.max_weight_sequence(bundle.model, config.seq_len,
                                         objective="sum")
        doc["max_weight_sequence"] = [bundle.vocabulary.token(t)
                                      for t in best.tokens]
        doc["max_weight_product"] = best.weight_product
        if by_sum.tokens != best.tokens:
            doc["max_weight_sequence_by_sum"] = [bundle.vocabulary.token(t)
                                                 for t in by_sum.tokens]
    path = os.path.join(out, "verify.json")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(f"validity {doc['validity_fraction']:.4f}, "
          f"coverage {doc['valid_coverage']:.4f}")
    return EXIT_OK


def cmd_generate(args) -> int:
    config = _resolve_config(args)
    ensemble = pl.run_generate(config)
    report_path = os.path.join(config.output_dir, "report.json")
    with open(report_path, encoding="utf-8") as fh:
        report = json.load(fh)
    print(f"{report['distinct_outputs']} distinct outputs, "
          f"validity {report['validity_fraction']:.4f}, "
          f"coverage {report['valid_coverage']:.4f}")
    return EXIT_OK if report["converged"] else EXIT_NON_CONVERGED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="groundgen",
        description="pattern-constrained generation via quantum ground-state search")
    subs = parser.add_subparsers(dest="command", required=True)

    p = subs.add_parser("extract", help="pattern catalog / n-gram model from input")
    _add_config_args(p)
    p.set_defaults(func=cmd_extract)

    p = subs.add_parser("build", help="write the global Hamiltonian dump")
    _add_config_args(p)
    p.set_defaults(func=cmd_build)

    p = subs.add_parser("spectrum", help="exact ground energy, gap and ground set")
    _add_config_args(p)
    p.set_defaults(func=cmd_spectrum)

    p = subs.add_parser("solve", help="run a ground-state solver")
    _add_config_args(p, seed_required=True)
    p.add_argument("--hamiltonian", help="hamiltonian.json from the build stage")
    p.add_argument("--method", dest="solver",
                   choices=["adiabatic", "vqe", "grover"])
    p.set_defaults(func=cmd_solve)

    p = subs.add_parser("sample", help="measure a saved statevector")
    p.add_argument("--state", required=True, help="state.npy from solve")
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", default="counts.json")
    p.set_defaults(func=cmd_sample)

    p = subs.add_parser("verify", help="compare sampled counts with the oracle")
    _add_config_args(p)
    p.add_argument("--counts", required=True, help="counts.json to verify")
    p.set_defaults(func=cmd_verify)

    p = subs.add_parser("generate", help="full pipeline: extract, build, solve, "
                                         "sample, decode")
    _add_config_args(p)
    p.set_defaults(func=cmd_generate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except InfeasibleModelError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except GroundgenError as exc:  # pragma: no cover - safety net
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
