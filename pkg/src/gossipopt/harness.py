"""Experiment configuration, execution, and CSV trace emission.

A JSON config describes one experiment: dataset source, shift-invert ratio r,
regularizer, gossip topology, and a list of solvers with per-solver
hyperparameter overrides. Running it produces one CSV per solver
(`solver,epoch,sfo,comm,cost,subopt,consensus`, floats at 17 significant
digits so reloads are bit-exact) plus a manifest with the instance constants
and the hyperparameters actually used. Re-running the same config yields
byte-identical files.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

from .gossip import GossipMatrix, build_lazy_ring, build_random_two_neighbor
from .problems import (DataMatrix, ProblemInstance, Regularizer,
                       closed_form_minimizer, gen_bernoulli_matrix, load_libsvm,
                       make_shift_invert_pca)
from .solvers import (RunTrace, default_hyperparams, run_centralized_svrg,
                      run_nids, run_pgextra, run_pmgt_katyushax, run_pmgt_svrg)

log = logging.getLogger("gossipopt")

STOCHASTIC_SOLVERS = ("pmgt_katyushax", "pmgt_svrg", "centralized_svrg")
FULL_GRADIENT_SOLVERS = ("pgextra", "nids")
KNOWN_SOLVERS = STOCHASTIC_SOLVERS + FULL_GRADIENT_SOLVERS

CSV_HEADER = "solver,epoch,sfo,comm,cost,subopt,consensus"


@dataclass
class ExperimentConfig:
    dataset: dict
    m: int
    r: float
    gossip: dict
    solvers: list
    K: int
    seed: int = 0
    rho_target: float = 0.1
    comm_weight: float = 1.0
    regularizer: dict = field(default_factory=dict)
    b_seed: int = 0
    out_dir: str | None = None

    def __post_init__(self):
        if self.m < 1:
            raise ValueError(f"m must be >= 1, got {self.m}")
        if self.K < 1:
            raise ValueError(f"K must be >= 1, got {self.K}")
        if self.comm_weight < 0:
            raise ValueError("comm_weight must be non-negative")
        if not self.solvers:
            raise ValueError("config must list at least one solver")
        names = [spec.get("name") for spec in self.solvers]
        for name in names:
            if name not in KNOWN_SOLVERS:
                raise ValueError(f"unknown solver {name!r}; known: {KNOWN_SOLVERS}")
        dupes = {n for n in names if names.count(n) > 1}
        if dupes:
            raise ValueError(f"duplicate solver entries: {sorted(dupes)}")

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        allowed = set(cls.__dataclass_fields__)
        unknown = set(raw) - allowed
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)


def build_dataset(spec: dict) -> DataMatrix:
    kind = spec.get("type")
    if kind == "bernoulli":
        return gen_bernoulli_matrix(spec["rows"], spec["cols"], spec.get("seed", 0))
    if kind == "libsvm":
        return load_libsvm(spec["path"], spec.get("max_rows"), spec.get("d_cap"))
    raise ValueError(f"unknown dataset type {kind!r}")


def build_gossip(spec: dict, m: int) -> GossipMatrix:
    kind = spec.get("type")
    if kind == "lazy_ring":
        return build_lazy_ring(m, spec.get("laziness", 0.5))
    if kind == "random_two_neighbor":
        return build_random_two_neighbor(m, spec.get("seed", 0))
    raise ValueError(f"unknown gossip type {kind!r}")


def build_instance(cfg: ExperimentConfig) -> ProblemInstance:
    data = build_dataset(cfg.dataset)
    usable = (data.rows // cfg.m) * cfg.m
    if usable == 0:
        raise ValueError(f"dataset has {data.rows} rows, fewer than m = {cfg.m}")
    if usable < data.rows:
        data = DataMatrix(data.values[:usable])
    inst = make_shift_invert_pca(data, cfg.m, cfg.r, b_seed=cfg.b_seed)
    reg = Regularizer.from_dict(cfg.regularizer) if cfg.regularizer else Regularizer()
    if reg.kind != "none":
        inst = inst.with_regularizer(reg)
    return inst


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def emit_csv(trace: RunTrace, path, comm_weight: float = 1.0) -> None:
    """One row per trace entry; cost = sfo + comm_weight * comm."""
    lines = [CSV_HEADER]
    for row in trace.rows:
        cost = row.sfo + comm_weight * row.comm
        lines.append(",".join([trace.solver, str(row.epoch), str(row.sfo),
                               str(row.comm), _fmt(cost), _fmt(row.subopt),
                               _fmt(row.consensus)]))
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write trace to {path}: {exc}") from exc


def read_csv(path) -> list[dict]:
    """Reload an emitted trace; numeric fields parse back bit-exactly."""
    text = Path(path).read_text().strip().splitlines()
    if not text or text[0] != CSV_HEADER:
        raise ValueError(f"{path}: unexpected header {text[0] if text else '<empty>'!r}")
    out = []
    for line in text[1:]:
        solver, epoch, sfo, comm, cost, subopt, consensus = line.split(",")
        out.append({"solver": solver, "epoch": int(epoch), "sfo": int(sfo),
                    "comm": int(comm), "cost": float(cost), "subopt": float(subopt),
                    "consensus": float(consensus)})
    return out


def _run_one(name: str, spec: dict, inst: ProblemInstance, W: GossipMatrix,
             cfg: ExperimentConfig, f_star: float | None) -> tuple[RunTrace, dict]:
    K = int(spec.get("K", cfg.K))
    if name in STOCHASTIC_SOLVERS:
        sc = default_hyperparams(
            inst if name != "centralized_svrg" else inst.flatten(), W, K=K,
            seed=int(spec.get("seed", cfg.seed)),
            rho_target=float(spec.get("rho_target", cfg.rho_target)),
            b=spec.get("b"), eta=spec.get("eta"), tau=spec.get("tau"),
            M=spec.get("M"))
        used = {"eta": sc.eta, "tau": sc.tau, "b": sc.b, "M": sc.M, "t0": sc.t0,
                "alpha": sc.alpha, "K": sc.K, "seed": sc.seed}
        if name == "pmgt_katyushax":
            return run_pmgt_katyushax(inst, sc, W, f_star=f_star), used
        if name == "pmgt_svrg":
            return run_pmgt_svrg(inst, sc, W, f_star=f_star), used
        return run_centralized_svrg(inst, sc, f_star=f_star), used
    step = float(spec.get("step", 1.0 / (2.0 * inst.L)))
    used = {"step": step, "K": K}
    if name == "pgextra":
        return run_pgextra(inst, step, W, K, f_star=f_star), used
    return run_nids(inst, step, W, K, f_star=f_star), used


def run_experiment(cfg: ExperimentConfig, out_dir=None) -> dict[str, RunTrace]:
    """Build the instance and gossip matrix, run every solver, write CSVs + manifest."""
    inst = build_instance(cfg)
    W = build_gossip(cfg.gossip, cfg.m)
    W.validate()
    try:
        x_star = closed_form_minimizer(inst)
        f_star = inst.objective_value(x_star)
        f_star_source = "closed_form"
    except ValueError:
        f_star, f_star_source = None, "best_achieved"
    log.info("instance: m=%d n=%d d=%d sigma=%.3e L=%.3e lambda2(W)=%.4f",
             inst.m, inst.n, inst.d, inst.sigma, inst.L, W.lambda2)

    traces: dict[str, RunTrace] = {}
    used_params: dict[str, dict] = {}
    for spec in cfg.solvers:
        name = spec["name"]
        trace, used = _run_one(name, spec, inst, W, cfg, f_star)
        traces[name] = trace
        used_params[name] = used
        log.info("%s: final subopt %s after %d rows", name,
                 trace.rows[-1].subopt, len(trace.rows))
    if f_star is None:
        f_star = min(min(r.f_value for r in t.rows) for t in traces.values())
        for t in traces.values():
            t.rebase(f_star)

    out = Path(out_dir if out_dir is not None else (cfg.out_dir or "."))
    out.mkdir(parents=True, exist_ok=True)
    for name, trace in traces.items():
        emit_csv(trace, out / f"{name}.csv", cfg.comm_weight)
    manifest = {
        "dataset": cfg.dataset,
        "m": inst.m, "n": inst.n, "d": inst.d,
        "regularizer": {"kind": inst.regularizer.kind, "lam": inst.regularizer.lam,
                        "ridge": inst.regularizer.ridge},
        "constants": {"L": inst.L, "ell1": inst.ell1, "ell2": inst.ell2,
                      "sigma_f": inst.sigma_f, "sigma": inst.sigma,
                      "kappa": (inst.L + math.sqrt(inst.ell1 * inst.ell2)) / inst.sigma
                      if inst.sigma > 0 else None},
        "instance": inst.meta,
        "lambda2_W": W.lambda2,
        "f_star": f_star,
        "f_star_source": f_star_source,
        "comm_weight": cfg.comm_weight,
        "seed": cfg.seed,
        "solvers": used_params,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return traces


def instance_constants(cfg: ExperimentConfig) -> dict:
    """Constants the `constants` CLI command prints; also a dry-run validation."""
    inst = build_instance(cfg)
    W = build_gossip(cfg.gossip, cfg.m)
    W.validate()
    kappa = (inst.L + math.sqrt(inst.ell1 * inst.ell2)) / inst.sigma if inst.sigma > 0 else float("inf")
    return {"m": inst.m, "n": inst.n, "d": inst.d, "L": inst.L, "ell1": inst.ell1,
            "ell2": inst.ell2, "sigma_f": inst.sigma_f, "sigma": inst.sigma,
            "kappa": kappa, "lambda2_W": W.lambda2, **inst.meta}
