"""Command-line front end: ``qifs-thermo TASK --config FILE [flags]``.

Exit codes: 0 on success, 2 on invalid input, 3 when a solver does not
converge. Errors print one line to stderr.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import holevo, markov, sim, thermo
from .errors import NonConvergence, QifsError, ValidationError
from .matcore import von_neumann_entropy
from .qifs import KrausFamily, QifsModel
from .rand import random_isometry_blocks, stream
from .solvers import SolveConfig, solve_lambda_fixed_point, solve_ruelle_eigen

TASKS = ("validate", "fixpoint", "eigen", "entropy", "pressure", "classic", "holevo", "markov-check", "sample", "sweep")
RANDOMIZED = {"markov-check", "sample", "sweep"}
DIGITS = 12

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGENCE = 0, 2, 3


class ConfigError(ValidationError):
    pass


# ---------------------------------------------------------------- parsing


def parse_entry(x) -> complex:
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(isinstance(v, (int, float)) for v in x):
        return complex(x[0], x[1])
    raise ConfigError(f"matrix entry must be a number or [re, im], got {x!r}")


def parse_matrix(rows) -> np.ndarray:
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise ConfigError("matrix must be a nonempty list of rows")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ConfigError("matrix rows have different lengths")
    return np.array([[parse_entry(x) for x in r] for r in rows], dtype=complex)


def parse_family(mats) -> KrausFamily:
    if not isinstance(mats, list) or not mats:
        raise ConfigError("a family must be a nonempty list of matrices")
    return KrausFamily.of([parse_matrix(m) for m in mats])


def parse_real(rows, name) -> np.ndarray:
    m = parse_matrix(rows)
    if np.any(m.imag != 0):
        raise ConfigError(f"{name} must be real")
    return m.real


def parse_stochastic(rows, convention: str | None, name: str) -> np.ndarray:
    if convention not in ("column-stochastic", "row-stochastic"):
        raise ConfigError(f'embedding needs "convention": "column-stochastic" or "row-stochastic" for {name}')
    m = parse_real(rows, name)
    return m if convention == "column-stochastic" else m.T


def flat_2x2(text: str, name: str) -> list:
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise ConfigError(f"--{name} must be four comma-separated numbers") from exc
    if len(vals) != 4:
        raise ConfigError(f"--{name} must be four comma-separated numbers")
    return [vals[:2], vals[2:]]


# ---------------------------------------------------------------- scenario


class Scenario:
    """Model, potential and solver settings assembled from a config dict."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        solver = dict(cfg.get("solver", {}))
        self.solve = SolveConfig(
            tol=float(solver.get("tol", 1e-12)),
            max_iter=int(solver.get("max_iter", 100_000)),
            regularization_n0=int(solver.get("regularization_n0", 0)),
        )
        self.options = dict(cfg.get("options", {}))
        self.seed = cfg.get("seed")
        self.V = self.W = self.H = None
        self.P = self.Q = self.A = None
        self.kind = None
        self.eig = None
        self._build()

    def _build(self):
        emb = self.cfg.get("embedding")
        fams = self.cfg.get("families", {})
        if emb is not None:
            self._embed(emb)
        for name in ("V", "H"):
            if name in fams:
                setattr(self, name, parse_family(fams[name]))
        if "W" in fams:
            if fams["W"] == "maximizing":
                self.W = "maximizing"
            else:
                self.W = parse_family(fams["W"])

    def _embed(self, emb):
        kind = emb.get("kind")
        try:
            self.kind = markov.EmbeddingKind(kind)
        except ValueError as exc:
            raise ConfigError(f"unknown embedding kind {kind!r}") from exc
        conv = emb.get("convention")
        if "P" in emb:
            self.P = parse_stochastic(emb["P"], conv, "P")
        if "Q" in emb:
            self.Q = parse_stochastic(emb["Q"], conv, "Q")
        if "A" in emb:
            self.A = parse_real(emb["A"], "A")
        k = self.kind
        if k is markov.EmbeddingKind.PERRON_POTENTIAL:
            self._need("A")
            self.V, self.H = markov.embed_perron(self.A)
        elif k is markov.EmbeddingKind.CLASSIC_BRIDGE:
            self._need("A", "Q")
            model, self.H = markov.embed_classic_bridge(self.A, self.Q)
            self.V, self.W = model.V, model.W
        else:
            if self.P is None:
                self.P = np.full((2, 2), 0.5)
            if not k.homogeneous:
                self._need("Q")
            model = markov.embed_stochastic(self.P, None if k.homogeneous else self.Q, k)
            self.V, self.W = model.V, model.W

    def _need(self, *names):
        for n in names:
            if getattr(self, n) is None:
                raise ConfigError(f"embedding {self.kind.value} needs {n}")

    def need_seed(self) -> int:
        if self.seed is None:
            raise ConfigError("this task is randomized and needs an explicit seed")
        return int(self.seed)

    def eigen(self):
        if self.eig is None:
            if self.V is None or self.H is None:
                raise ConfigError("this task needs families V and H")
            self.eig = solve_ruelle_eigen(self.H, self.V, self.solve)
        return self.eig

    def model(self) -> QifsModel:
        if self.V is None or self.W is None:
            raise ConfigError("this task needs families V and W")
        if isinstance(self.W, str):
            self.W = thermo.maximizing_weights(self.V, self.H, self.eigen())
        return QifsModel(self.V, self.W)


# ---------------------------------------------------------------- tasks


class Report:
    def __init__(self):
        self.results: dict = {}
        self.residuals: dict = {}
        self.iterations: dict = {}
        self.rows: list | None = None


def task_validate(sc: Scenario, rep: Report):
    for name in ("V", "W", "H"):
        fam = getattr(sc, name)
        if isinstance(fam, KrausFamily):
            rep.results[f"{name}.k"] = fam.k
            rep.results[f"{name}.dim"] = fam.dim
            rep.residuals[f"{name}.normalization"] = fam.normalization_error()
    if isinstance(sc.W, KrausFamily):
        sc.model()
    if sc.V is not None and sc.H is not None and (sc.H.k != sc.V.k or sc.H.dim != sc.V.dim):
        raise ValidationError("H and V must have the same arity and dimension")
    rep.results["valid"] = True


def _fixpoint(sc, rep):
    m = sc.model()
    rho, it, res = solve_lambda_fixed_point(m, sc.solve)
    rep.iterations["lambda"] = it
    rep.residuals["lambda"] = res
    return m, rho


def task_fixpoint(sc, rep):
    _, rho = _fixpoint(sc, rep)
    rep.results["rho_W"] = rho


def task_eigen(sc, rep):
    eig = sc.eigen()
    rep.results["beta"] = eig.beta
    rep.results["log_beta"] = math.log(eig.beta)
    rep.results["rho_beta"] = eig.rho_beta
    rep.results["mode"] = eig.mode
    rep.residuals["eigen"] = eig.residual
    rep.iterations["eigen"] = eig.iterations


def task_entropy(sc, rep):
    m, rho = _fixpoint(sc, rep)
    rep.results["entropy"] = thermo.qifs_entropy(m, rho)
    rep.results["rho_W"] = rho
    if sc.kind is not None and sc.kind.value in ("hom4", "nonhom4", "hom2", "nonhom2"):
        gov = markov.governing_matrix(sc.P, sc.Q, sc.kind)
        rep.results["markov_entropy"] = thermo.markov_entropy(gov)
        rep.residuals["entropy_vs_markov"] = abs(rep.results["entropy"] - rep.results["markov_entropy"])


def _report_fields(rep, r: thermo.PressureReport, prefix=""):
    rep.results[prefix + "entropy_term"] = r.entropy_term
    rep.results[prefix + "potential_term"] = r.potential_term
    rep.results[prefix + "lhs"] = r.lhs
    rep.results[prefix + "log_beta"] = r.log_beta
    rep.results[prefix + "gap"] = r.gap
    rep.residuals[prefix + "equality"] = r.equality_residual


def task_pressure(sc, rep):
    eig = sc.eigen()
    m, rho = _fixpoint(sc, rep)
    rep.iterations["eigen"] = eig.iterations
    rep.residuals["eigen"] = eig.residual
    rep.results["beta"] = eig.beta
    form = sc.options.get("form", "trace")
    if form == "trace":
        r = thermo.pressure_check_trace_form(m, sc.H, eig, rho)
    elif form == "coordinate":
        l, c = sc.options.get("coordinate", [0, 0])
        r = thermo.pressure_check_coordinate_form(m, sc.H, eig, rho, int(l), int(c))
    else:
        raise ConfigError(f"unknown pressure form {form!r}")
    _report_fields(rep, r)


def task_classic(sc, rep):
    if sc.A is None or sc.Q is None:
        raise ConfigError("classic needs an embedding with A and Q")
    r = thermo.classic_inequality_check(sc.A, sc.Q)
    _report_fields(rep, r)
    rep.results["maximizer"] = thermo.classic_maximizer(sc.A)


def task_holevo(sc, rep):
    m, rho = _fixpoint(sc, rep)
    ens = holevo.induced_ensemble(m, rho)
    xi = holevo.holevo_information(ens)
    h = thermo.qifs_entropy(m, rho)
    cond = float(sum(p * von_neumann_entropy(s) for p, s in zip(ens.probs, ens.states)))
    rep.results["xi"] = xi
    rep.results["S_average"] = von_neumann_entropy(ens.average())
    rep.results["conditional_entropy"] = cond
    rep.results["entropy"] = h
    rep.residuals["conditional_vs_entropy"] = abs(cond - h)
    lifted = holevo.label_povm(m, rho, holevo.povm_from_weights(m.W))
    info = holevo.mutual_information(holevo.born_joint(ens, lifted))
    rep.results["mutual_information"] = info
    rep.results["holevo_slack"] = xi - info
    n_random = int(sc.options.get("random_povms", 0))
    if n_random:
        rng = stream(sc.need_seed(), 0)
        worst = math.inf
        for _ in range(n_random):
            povm = holevo.random_povm(rng, m.k, int(sc.options.get("outcomes", m.k)))
            worst = min(worst, xi - holevo.mutual_information(holevo.born_joint(ens, povm)))
        rep.results["random_povm_min_slack"] = worst


def task_markov_check(sc, rep):
    if sc.P is None:
        raise ConfigError("markov-check needs an embedding with P")
    seed = sc.need_seed()
    p = sc.P
    rep.results["stationary"] = markov.stationary_vector(p)
    rep.results["markov_entropy"] = thermo.markov_entropy(p)
    n_max = int(sc.options.get("max_power", 6))
    rep.residuals["power_identity"] = max(markov.markov_power_identity(p, n, seed=seed) for n in range(1, n_max + 1))
    n_lim = int(sc.options.get("limit_power", 50))
    rep.residuals["power_limit"] = markov.markov_power_limit(p, n_lim, seed=seed)


def task_sample(sc, rep):
    seed = sc.need_seed()
    m = sc.model()
    burn = int(sc.options.get("burn_in", sim.BURN_IN))
    n = int(sc.options.get("samples", sim.SAMPLES))
    bar, ent = sim.estimate_both(m, burn, n, seed)
    rep.results["barycenter"] = bar.value
    rep.results["barycenter_stderr"] = bar.stderr_norm
    rep.results["entropy_integral"] = ent.value
    rep.results["entropy_stderr"] = ent.stderr
    rep.iterations["samples"] = n
    try:
        rho, it, res = solve_lambda_fixed_point(m, sc.solve)
    except NonConvergence:
        return
    from .matcore import hs_distance

    rep.results["rho_W"] = rho
    rep.results["entropy"] = thermo.qifs_entropy(m, rho)
    rep.iterations["lambda"] = it
    rep.residuals["barycenter_vs_fixed_point"] = hs_distance(bar.value, rho)
    rep.residuals["entropy_vs_integral"] = abs(ent.value - rep.results["entropy"])


def _sweep_one(args):
    V_ops, H_ops, tol, max_iter, seed, idx = args
    V, H = KrausFamily(V_ops), KrausFamily(H_ops)
    cfg = SolveConfig(tol=tol, max_iter=max_iter)
    eig = solve_ruelle_eigen(H, V, cfg)
    W = KrausFamily(random_isometry_blocks(stream(seed, idx + 1), V.k, V.dim))
    m = QifsModel(V, W)
    rho, _, _ = solve_lambda_fixed_point(m, cfg)
    r = thermo.pressure_check_trace_form(m, H, eig, rho)
    return {"sample": idx, "entropy": r.entropy_term, "lhs": r.lhs, "log_beta": r.log_beta, "gap": r.gap,
            "equality_residual": r.equality_residual}


def task_sweep(sc, rep, jobs: int = 1):
    seed = sc.need_seed()
    if sc.V is None or sc.H is None:
        raise ConfigError("sweep needs families V and H")
    n = int(sc.options.get("samples", 100))
    work = [(sc.V.ops, sc.H.ops, sc.solve.tol, sc.solve.max_iter, seed, i) for i in range(n)]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_one, work, chunksize=max(1, n // (4 * jobs))))
    else:
        rows = [_sweep_one(w) for w in work]
    rep.rows = rows
    gaps = np.array([r["gap"] for r in rows])
    rep.results["samples"] = n
    rep.results["min_gap"] = float(gaps.min())
    rep.results["max_gap"] = float(gaps.max())
    rep.results["log_beta"] = rows[0]["log_beta"] if rows else float("nan")


HANDLERS = {
    "validate": task_validate,
    "fixpoint": task_fixpoint,
    "eigen": task_eigen,
    "entropy": task_entropy,
    "pressure": task_pressure,
    "classic": task_classic,
    "holevo": task_holevo,
    "markov-check": task_markov_check,
    "sample": task_sample,
}


# ---------------------------------------------------------------- output


def fmt(x) -> str:
    return f"{x:.{DIGITS}g}"


def to_json_value(v):
    if isinstance(v, np.ndarray):
        if np.iscomplexobj(v):
            if np.all(v.imag == 0):
                return to_json_value(v.real)
            return [[[to_json_value(z.real), to_json_value(z.imag)] for z in row] for row in np.atleast_2d(v)]
        return [to_json_value(x) for x in v.tolist()] if v.ndim else to_json_value(float(v))
    if isinstance(v, list):
        return [to_json_value(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return float(fmt(v)) if math.isfinite(v) else str(v)
    return v


def _text(v) -> str:
    if isinstance(v, np.ndarray):
        if np.iscomplexobj(v) and np.all(v.imag == 0):
            v = v.real
        if v.ndim == 1:
            return "[" + ", ".join(_scalar(x) for x in v) + "]"
        return "[" + "; ".join(", ".join(_scalar(x) for x in row) for row in v) + "]"
    return _scalar(v)


def _scalar(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (complex, np.complexfloating)):
        return f"{fmt(x.real)}{'+' if x.imag >= 0 else '-'}{fmt(abs(x.imag))}j"
    if isinstance(x, (float, np.floating)):
        return fmt(float(x))
    return str(x)


def render(task, rep: Report, digest, seed, out: str) -> str:
    if out == "json":
        record = {
            "task": task,
            "inputs_digest": digest,
            "results": {k: to_json_value(v) for k, v in rep.results.items()},
            "residuals": {k: to_json_value(v) for k, v in rep.residuals.items()},
            "iterations": {k: int(v) for k, v in rep.iterations.items()},
            "seed": seed,
        }
        if rep.rows is not None:
            record["results"]["rows"] = [{k: to_json_value(v) for k, v in r.items()} for r in rep.rows]
        return json.dumps(record, indent=2)
    if out == "csv":
        buf = io.StringIO()
        if rep.rows is not None:
            w = csv.DictWriter(buf, fieldnames=list(rep.rows[0]) if rep.rows else ["sample"])
            w.writeheader()
            for r in rep.rows:
                w.writerow({k: _scalar(v) for k, v in r.items()})
        else:
            w = csv.writer(buf)
            w.writerow(["section", "key", "value"])
            for section, d in (("results", rep.results), ("residuals", rep.residuals), ("iterations", rep.iterations)):
                for k, v in d.items():
                    w.writerow([section, k, _text(v)])
        return buf.getvalue().rstrip("\n")
    lines = [f"task: {task}", f"seed: {seed}", f"inputs_digest: {digest}"]
    for section, d in (("results", rep.results), ("residuals", rep.residuals), ("iterations", rep.iterations)):
        if d:
            lines.append(f"{section}:")
            width = max(len(k) for k in d)
            lines.extend(f"  {k.ljust(width)}  {_text(v)}" for k, v in d.items())
    return "\n".join(lines)


# ---------------------------------------------------------------- driver


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qifs-thermo", description="Thermodynamic quantities of quantum iterated function systems.")
    ap.add_argument("task", choices=TASKS)
    ap.add_argument("--config", type=Path, help="JSON scenario file")
    ap.add_argument("--out", choices=("table", "json", "csv"), default="table")
    ap.add_argument("--tol", type=float)
    ap.add_argument("--max-iter", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--embed", choices=[k.value for k in markov.EmbeddingKind], help="build the model from a stochastic embedding")
    ap.add_argument("--p", help="P as four numbers, row-major, column-stochastic")
    ap.add_argument("--q", help="Q as four numbers, row-major, column-stochastic")
    ap.add_argument("--a", help="A as four numbers, row-major")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def load_config(args) -> dict:
    cfg: dict = {}
    if args.config is not None:
        try:
            cfg = json.loads(args.config.read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config} is not valid JSON: {exc.msg} at line {exc.lineno}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object")
    if args.embed or args.p or args.q or args.a:
        emb = dict(cfg.get("embedding", {}))
        if args.embed:
            emb["kind"] = args.embed
        if "kind" not in emb:
            raise ConfigError("--p/--q/--a need --embed or an embedding in the config")
        emb.setdefault("convention", "column-stochastic")
        row_major = emb["convention"] == "row-stochastic"
        for flag, key in ((args.p, "P"), (args.q, "Q"), (args.a, "A")):
            if flag:
                m = flat_2x2(flag, key.lower())
                # flags are column-stochastic; store them in the config's convention
                emb[key] = [list(r) for r in zip(*m)] if row_major and key != "A" else m
        cfg["embedding"] = emb
    solver = dict(cfg.get("solver", {}))
    if args.tol is not None:
        solver["tol"] = args.tol
    if args.max_iter is not None:
        solver["max_iter"] = args.max_iter
    if solver:
        cfg["solver"] = solver
    if args.seed is not None:
        cfg["seed"] = args.seed
    if not cfg:
        raise ConfigError("nothing to do: give --config or --embed")
    return cfg


def digest_of(cfg: dict) -> str:
    canon = json.dumps({k: v for k, v in cfg.items() if k != "expected"}, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=stderr)
    try:
        cfg = load_config(args)
        sc = Scenario(cfg)
        if args.task in RANDOMIZED:
            sc.need_seed()
        rep = Report()
        if args.task == "sweep":
            task_sweep(sc, rep, jobs=max(1, args.jobs))
        else:
            HANDLERS[args.task](sc, rep)
    except NonConvergence as exc:
        print(f"qifs-thermo: did not converge: {exc}", file=stderr)
        return EXIT_NONCONVERGENCE
    except (QifsError, ValueError) as exc:
        print(f"qifs-thermo: invalid input: {exc}", file=stderr)
        return EXIT_INVALID
    print(render(args.task, rep, digest_of(cfg), cfg.get("seed"), args.out), file=stdout)
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
