"""``fidshadow`` command-line interface.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 non-convergence,
5 inapplicable method.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from importlib import metadata

import numpy as np

from .discriminate import discriminate
from .errors import InapplicableMethod, NonConvergence, ValidationError
from .numrange import extremal_fidelity, shadow_sample
from .quantum_core import default_workers, sample_fidelities
from .schur import SchurChannel, gram_matrix, phi_p, phi_prime, schur_max_fidelity, schur_min_fidelity
from .serialize import ParseError, Source, complex_matrix, dumps, fmt, load_source, parse_source
from .simplex_shadow import (
    commuting_collection,
    histogram_pdf,
    pdf_commuting_channel,
    pdf_unitary_epsilon,
    shadow_uniformity_check,
)

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_NONCONVERGENCE, EXIT_INAPPLICABLE = 0, 2, 3, 4, 5
COMMANDS = ("pdf", "extremes", "minfid", "shadow", "discriminate", "mean")
METHODS = ("analytic", "montecarlo", "simplex", "epsilon")
SWEEP_Q = (1.0, 0.3, 0.0)
ZERO_SNAP = 1e-15


def version() -> str:
    try:
        return metadata.version("fidshadow")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass(frozen=True)
class RunConfig:
    command: str
    inputs: tuple[str, ...] = ()
    samples: int = 100_000
    seed: int = 0
    bins: int = 100
    workers: int = 1
    method: str | None = None
    out: str | None = None
    epsilon: float = 0.01
    aux: str | None = None
    grid: int = 2001
    deterministic: bool = False
    family: dict | None = None
    sweep_p: int | None = None

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ValidationError(f"unknown command {self.command!r}")
        if self.samples < 1:
            raise ValidationError("--samples must be >= 1")
        if self.bins < 2:
            raise ValidationError("--bins must be >= 2")
        if self.workers < 1:
            raise ValidationError("--workers must be >= 1")
        if self.grid < 2:
            raise ValidationError("--grid must be >= 2")
        if self.method is not None and self.method not in METHODS:
            raise ValidationError(f"unknown method {self.method!r}")
        if self.method is not None and self.command not in ("pdf", "mean"):
            raise ValidationError(f"--method does not apply to {self.command}")


def _header(cfg: RunConfig, randomized: bool, **extra) -> dict:
    h = {"command": cfg.command, "version": version()}
    if randomized:
        h.update(seed=cfg.seed, n=cfg.samples, workers=cfg.workers)
    if not cfg.deterministic:
        h["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime())
    h.update(extra)
    return h


def _snap(x: float) -> float:
    x = min(max(float(x), 0.0), 1.0)
    if x < ZERO_SNAP:
        return 0.0
    if 1.0 - x < ZERO_SNAP:
        return 1.0
    return x


def _source(cfg: RunConfig, index: int = 0) -> Source:
    if cfg.family is not None and index == 0:
        return parse_source(cfg.family)
    if len(cfg.inputs) <= index:
        raise ParseError("missing channel input (file path or --family)")
    return load_source(cfg.inputs[index])


def _csv(header: dict, columns: list[str], rows) -> str:
    lines = ["# " + dumps(header), ",".join(columns)]
    lines += [",".join(fmt(float(v)) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_aux(path: str | None):
    if path is None:
        return None
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, list):
        raise ParseError("--aux file must hold a list of matrices")
    return [complex_matrix(m) for m in obj]


def _pdf(cfg: RunConfig) -> str:
    src = _source(cfg)
    method = cfg.method or ("analytic" if src.analytic else "montecarlo")
    if method == "analytic":
        if src.analytic is None:
            raise InapplicableMethod("analytic density needs a qubit_unitary, qutrit_unitary, pauli or mixed_unitary family")
        pdf = src.analytic()
        f, p = pdf.grid(cfg.grid)
        head = _header(
            cfg, False, method=method, support=list(pdf.support), cusps=list(pdf.cusps),
            cusp_labels=list(pdf.cusp_labels), singularities=list(pdf.singularities),
            mean=pdf.mean(), std=pdf.std(),
        )
        return _csv(head, ["F", "P"], zip(f, p))

    if method == "montecarlo":
        samples = sample_fidelities(src.channel, cfg.samples, cfg.seed, cfg.workers)
        bounds = extremal_fidelity(src.channel)
        hp = histogram_pdf(samples, (_snap(bounds.f_min), _snap(bounds.f_max)), cfg.bins, name="montecarlo")
    elif method == "simplex":
        hp = pdf_commuting_channel(src.channel, cfg.samples, cfg.seed, cfg.bins, cfg.workers)
    else:
        if src.channel.m != 1:
            raise InapplicableMethod("the epsilon method needs a unitary channel (one Kraus operator)")
        hp = pdf_unitary_epsilon(
            src.channel.kraus[0], _load_aux(cfg.aux), cfg.epsilon, cfg.samples, cfg.seed, cfg.bins, cfg.workers
        )
    centers = (hp.edges[:-1] + hp.edges[1:]) / 2
    extra = {"epsilon": cfg.epsilon} if method == "epsilon" else {}
    head = _header(
        cfg, True, method=method, support=[float(v) for v in hp.support], bins=len(hp.values),
        mean=hp.mean(), std=hp.std(), **extra,
    )
    return _csv(head, ["F", "P"], zip(centers, hp.values))


def _extremes(cfg: RunConfig) -> str:
    src = _source(cfg)
    b = extremal_fidelity(src.channel, seed=cfg.seed, strict=True)
    out = {"F_min": _snap(b.f_min), "F_max": _snap(b.f_max)}
    return dumps(out) + "\n"


def _sweep(cfg: RunConfig) -> str:
    k = cfg.sweep_p
    if k is None or k < 2:
        raise ValidationError("--sweep-p needs at least 2 points")
    rows = []
    for p in np.linspace(0.0, 1.0, k):
        row = [p, schur_min_fidelity(gram_matrix(phi_p(p))).f_min]
        row += [schur_min_fidelity(gram_matrix(phi_prime(p, q))).f_min for q in SWEEP_Q]
        rows.append(row)
    cols = ["p", "F_min_phi"] + [f"F_min_phi_prime_q{q:g}" for q in SWEEP_Q]
    return _csv(_header(cfg, False, points=k), cols, rows)


def _minfid(cfg: RunConfig) -> str:
    if cfg.sweep_p is not None:
        return _sweep(cfg)
    src = _source(cfg)
    sc = src.schur or SchurChannel.from_channel(src.channel)
    g = gram_matrix(sc)
    res = schur_min_fidelity(g)
    f_max, _ = schur_max_fidelity(g)
    out = {"F_min": res.f_min, "F_max": f_max, "p_star": res.p_star.p.tolist(), "location": res.location}
    return dumps(out) + "\n"


def _shadow(cfg: RunConfig) -> str:
    src = _source(cfg)
    ops = src.channel.split()
    ops = [h for h in ops if np.max(np.abs(h)) > 0]
    cloud = shadow_sample(ops, cfg.samples, cfg.seed, cfg.workers)
    try:
        coll = commuting_collection(ops)
    except InapplicableMethod as exc:
        uniformity = {"applicable": False, "reason": str(exc)}
    else:
        uniformity = {"applicable": True, **shadow_uniformity_check(coll, cfg.samples, cfg.seed).to_dict()}
    head = _header(cfg, True, uniformity=uniformity)
    return "# " + dumps(head) + "\n" + cloud.to_csv()


def _discriminate(cfg: RunConfig) -> str:
    a, b = _source(cfg, 0), load_source(cfg.inputs[1]) if len(cfg.inputs) > 1 else None
    if b is None:
        raise ParseError("discriminate needs two channel files")
    rep = discriminate(a.channel, b.channel, cfg.samples, cfg.seed, workers=cfg.workers)
    return dumps({**_header(cfg, True), "report": rep.to_dict()}) + "\n"


def _mean(cfg: RunConfig) -> str:
    src = _source(cfg)
    method = cfg.method or ("analytic" if src.analytic else "montecarlo")
    if method == "analytic":
        if src.analytic is None:
            raise InapplicableMethod("analytic moments need an analytic family")
        pdf = src.analytic()
        return dumps({**_header(cfg, False), "method": method, "mean": pdf.mean(), "std": pdf.std()}) + "\n"
    if method != "montecarlo":
        raise InapplicableMethod(f"mean supports analytic or montecarlo, not {method}")
    s = sample_fidelities(src.channel, cfg.samples, cfg.seed, cfg.workers)
    out = {**_header(cfg, True), "method": method, "mean": s.mean(), "std": s.std(), "stderr": s.stderr()}
    return dumps(out) + "\n"


HANDLERS = {
    "pdf": _pdf,
    "extremes": _extremes,
    "minfid": _minfid,
    "shadow": _shadow,
    "discriminate": _discriminate,
    "mean": _mean,
}


def run(cfg: RunConfig) -> int:
    _emit(cfg, HANDLERS[cfg.command](cfg))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fidshadow", description="Operation-fidelity distributions of quantum channels.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("inputs", nargs="*", help="channel JSON files")
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--bins", type=int, default=100)
    ap.add_argument("--workers", type=int, default=None, help="default: $FIDSHADOW_WORKERS or 1")
    ap.add_argument("--method", choices=METHODS)
    ap.add_argument("--epsilon", type=float, default=0.01)
    ap.add_argument("--aux", help="JSON file with the auxiliary Hermitian operators")
    ap.add_argument("--grid", type=int, default=2001, help="grid points for analytic densities")
    ap.add_argument("--out")
    ap.add_argument("--deterministic", action="store_true", help="omit the timestamp")
    fam = ap.add_argument_group("family shorthand")
    fam.add_argument("--family", choices=("qubit_unitary", "pauli", "qutrit_unitary", "schur", "mixed_unitary"))
    fam.add_argument("--alpha", type=float)
    fam.add_argument("--beta", type=float)
    fam.add_argument("--p", type=float, nargs=4, metavar=("P0", "P1", "P2", "P3"))
    fam.add_argument("--eigs", help="Schur eigenvalue matrix as JSON")
    fam.add_argument("--terms", help="mixed-unitary terms as JSON")
    ap.add_argument("--sweep-p", type=int, metavar="N", help="minfid: sweep p over N grid points")
    return ap


def _family(args: argparse.Namespace) -> dict | None:
    if args.family is None:
        return None
    obj: dict = {"family": args.family}
    for key in ("alpha", "beta", "p"):
        v = getattr(args, key)
        if v is not None:
            obj[key] = v
    for key in ("eigs", "terms"):
        v = getattr(args, key)
        if v is not None:
            try:
                obj[key] = json.loads(v)
            except json.JSONDecodeError as exc:
                raise ParseError(f"--{key}: {exc}") from exc
    return obj


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_intermixed_args(argv)
    try:
        family = _family(args)
        if args.family == "schur" and args.sweep_p is not None and args.eigs is None:
            family = None
        cfg = RunConfig(
            command=args.command,
            inputs=tuple(args.inputs),
            samples=args.samples,
            seed=args.seed,
            bins=args.bins,
            workers=args.workers if args.workers is not None else default_workers(),
            method=args.method,
            out=args.out,
            epsilon=args.epsilon,
            aux=args.aux,
            grid=args.grid,
            deterministic=args.deterministic,
            family=family,
            sweep_p=args.sweep_p,
        )
        return run(cfg)
    except BrokenPipeError:
        return EXIT_OK
    except (ParseError, FileNotFoundError, IsADirectoryError, PermissionError, json.JSONDecodeError) as exc:
        print(f"fidshadow: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NonConvergence as exc:
        print(f"fidshadow: did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except InapplicableMethod as exc:
        print(f"fidshadow: inapplicable method: {exc}", file=sys.stderr)
        return EXIT_INAPPLICABLE
    except ValidationError as exc:
        print(f"fidshadow: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
