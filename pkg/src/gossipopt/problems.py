"""Sharded composite objectives, proximal operators, and benchmark instances.

The composite objective is F(x) = f(x) + psi(x) with
f(x) = (1/(m n)) sum_i sum_j f_{i,j}(x); agent i owns the contiguous shard
{f_{i,1}, ..., f_{i,n}}. Only quadratic instances ship with smoothness
constants and closed-form oracles: each component is either the rank-one
shift-invert form f_{i,j}(x) = x^T (c I - a a^T) x / 2 + b^T x or carries an
explicit (possibly indefinite) Hessian Q_{i,j}.
"""

import struct
from dataclasses import dataclass, replace

import numpy as np


class ParseError(ValueError):
    """Malformed libsvm input; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class DegenerateEigengap(ValueError):
    """Top two data eigenvalues coincide; the shift-invert ratio is undefined."""


@dataclass(frozen=True)
class Regularizer:
    """Convex nonsmooth part psi(x) = lam * ||x||_1 + (ridge / 2) * ||x||^2."""

    lam: float = 0.0
    ridge: float = 0.0

    def __post_init__(self):
        if self.lam < 0 or self.ridge < 0:
            raise ValueError("regularizer weights must be non-negative")

    @property
    def kind(self) -> str:
        if self.lam == 0 and self.ridge == 0:
            return "none"
        if self.ridge == 0:
            return "l1"
        if self.lam == 0:
            return "squared_l2"
        return "l1_plus_squared_l2"

    @property
    def sigma_psi(self) -> float:
        return self.ridge

    def value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(self.lam * np.abs(x).sum() + 0.5 * self.ridge * (x * x).sum())

    @classmethod
    def from_dict(cls, spec: dict) -> "Regularizer":
        kind = spec.get("kind", "none")
        known = {"none", "l1", "squared_l2", "l1_plus_squared_l2"}
        if kind not in known:
            raise ValueError(f"unknown regularizer kind {kind!r}")
        lam = float(spec.get("lam", 0.0)) if kind in ("l1", "l1_plus_squared_l2") else 0.0
        ridge = float(spec.get("eps_f", 0.0)) if kind in ("squared_l2", "l1_plus_squared_l2") else 0.0
        return cls(lam=lam, ridge=ridge)


def prox(eta: float, reg: Regularizer, x: np.ndarray) -> np.ndarray:
    """prox_{eta, psi}(x): soft-threshold by eta*lam, then shrink by 1 + eta*ridge.

    Applied elementwise, so an (m, d) agent stack is handled row-wise, which
    is exactly the aggregated prox_{m eta, Psi}.
    """
    if eta <= 0:
        raise ValueError(f"prox step must be positive, got {eta}")
    x = np.asarray(x, dtype=float)
    if reg.lam > 0:
        x = np.sign(x) * np.maximum(np.abs(x) - eta * reg.lam, 0.0)
    if reg.ridge > 0:
        x = x / (1.0 + eta * reg.ridge)
    return x


_CACHE_HEADER = struct.Struct("<II")


@dataclass
class DataMatrix:
    """Dense (rows, cols) sample matrix; row i is one data vector a_i."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise ValueError("data matrix must be 2-d")
        if not np.isfinite(self.values).all():
            raise ValueError("data matrix contains non-finite entries")
        self._row_norms_sq = None

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def row_norms_sq(self) -> np.ndarray:
        if self._row_norms_sq is None:
            self._row_norms_sq = (self.values * self.values).sum(axis=1)
        return self._row_norms_sq

    def save(self, path) -> None:
        """Binary dump: 8-byte little-endian (rows, cols) header + float64 row-major."""
        with open(path, "wb") as fh:
            fh.write(_CACHE_HEADER.pack(self.rows, self.cols))
            fh.write(self.values.tobytes(order="C"))

    @classmethod
    def load(cls, path) -> "DataMatrix":
        with open(path, "rb") as fh:
            rows, cols = _CACHE_HEADER.unpack(fh.read(_CACHE_HEADER.size))
            buf = fh.read(rows * cols * 8)
        if len(buf) != rows * cols * 8:
            raise ValueError(f"truncated cache file {path}")
        return cls(np.frombuffer(buf, dtype="<f8").reshape(rows, cols).copy())


def gen_bernoulli_matrix(rows: int, cols: int, seed: int) -> DataMatrix:
    """i.i.d. +/-1 entries with probability 1/2 each, deterministic per seed."""
    if rows < 1 or cols < 1:
        raise ValueError("matrix dimensions must be positive")
    rng = np.random.default_rng(seed)
    return DataMatrix((rng.integers(0, 2, size=(rows, cols)) * 2 - 1).astype(float))


def load_libsvm(path, max_rows: int | None = None, d_cap: int | None = None) -> DataMatrix:
    """Parse libsvm sparse text ("label idx:val ...", 1-based ascending indices).

    Labels are discarded; missing indices densify to 0; features beyond d_cap
    are dropped. Without d_cap the width is the largest index seen.
    """
    parsed: list[dict[int, float]] = []
    max_idx = 0
    with open(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if max_rows is not None and len(parsed) >= max_rows:
                break
            feats: dict[int, float] = {}
            prev_idx = 0
            for tok in line.split()[1:]:
                if ":" not in tok:
                    raise ParseError(lineno, f"expected idx:val pair, got {tok!r}")
                idx_s, val_s = tok.split(":", 1)
                try:
                    idx, val = int(idx_s), float(val_s)
                except ValueError as exc:
                    raise ParseError(lineno, f"bad idx:val pair {tok!r}") from exc
                if idx < 1:
                    raise ParseError(lineno, f"indices are 1-based, got {idx}")
                if idx <= prev_idx:
                    raise ParseError(lineno, f"indices must be ascending, got {idx} after {prev_idx}")
                prev_idx = idx
                if d_cap is None or idx <= d_cap:
                    feats[idx - 1] = val
                max_idx = max(max_idx, idx)
            parsed.append(feats)
    width = d_cap if d_cap is not None else max_idx
    out = np.zeros((len(parsed), width))
    for i, feats in enumerate(parsed):
        for j, v in feats.items():
            out[i, j] = v
    return DataMatrix(out)


class ProblemInstance:
    """Sharded quadratic finite sum with component oracles and constants.

    Exactly one of the payloads is set: `data`+`shift` for rank-one components
    (c I - a a^T), or `hessians` with shape (m, n, d, d) for explicit ones.
    """

    def __init__(self, m, n, d, regularizer, b_vec, *, data=None, shift=None,
                 hessians=None, meta=None):
        if (data is None) == (hessians is None):
            raise ValueError("exactly one of data/hessians must be given")
        self.m, self.n, self.d = int(m), int(n), int(d)
        self.regularizer = regularizer
        self.b_vec = np.asarray(b_vec, dtype=float)
        if self.b_vec.shape != (self.d,):
            raise ValueError("linear term has wrong dimension")
        if data is not None:
            data = np.asarray(data, dtype=float)
            if data.shape != (self.m * self.n, self.d):
                raise ValueError(f"data shape {data.shape} != ({self.m * self.n}, {self.d})")
            self.data = data
            self.shift = float(shift)
            self._shards = data.reshape(self.m, self.n, self.d)
            self.hessians = None
        else:
            self.hessians = np.asarray(hessians, dtype=float)
            if self.hessians.shape != (self.m, self.n, self.d, self.d):
                raise ValueError("hessians must have shape (m, n, d, d)")
            self.data = None
            self.shift = None
        self.meta = dict(meta or {})
        consts = smoothness_constants(self)
        self.L = consts["L"]
        self.ell1 = consts["ell1"]
        self.ell2 = consts["ell2"]
        self.sigma_f = consts["sigma_f"]
        assert self.ell2 >= self.ell1 > 0 and self.L <= self.ell1 + 1e-12

    @property
    def sigma(self) -> float:
        return self.sigma_f + self.regularizer.sigma_psi

    # --- quadratic structure -------------------------------------------------

    def global_hessian(self) -> np.ndarray:
        """Hessian of the smooth part f (average over all m*n components)."""
        if self.data is not None:
            N = self.m * self.n
            return self.shift * np.eye(self.d) - self.data.T @ self.data / N
        return self.hessians.mean(axis=(0, 1))

    def component_hessian(self, i: int, j: int) -> np.ndarray:
        self._check_index(i, j)
        if self.data is not None:
            a = self._shards[i, j]
            return self.shift * np.eye(self.d) - np.outer(a, a)
        return self.hessians[i, j]

    def _check_index(self, i: int, j: int) -> None:
        if not (0 <= i < self.m and 0 <= j < self.n):
            raise IndexError(f"component ({i}, {j}) out of range for {self.m}x{self.n}")

    # --- oracles --------------------------------------------------------------

    def component_value(self, i: int, j: int, x: np.ndarray) -> float:
        self._check_index(i, j)
        x = np.asarray(x, dtype=float)
        if self.data is not None:
            a = self._shards[i, j]
            return float(0.5 * self.shift * x @ x - 0.5 * (a @ x) ** 2 + self.b_vec @ x)
        return float(0.5 * x @ (self.hessians[i, j] @ x) + self.b_vec @ x)

    def component_grad(self, i: int, j: int, x: np.ndarray) -> np.ndarray:
        self._check_index(i, j)
        x = np.asarray(x, dtype=float)
        if self.data is not None:
            a = self._shards[i, j]
            return self.shift * x - a * (a @ x) + self.b_vec
        return self.hessians[i, j] @ x + self.b_vec

    def local_full_grad(self, i: int, x: np.ndarray) -> np.ndarray:
        """grad f_i(x), the average of agent i's n component gradients."""
        if not 0 <= i < self.m:
            raise IndexError(f"agent {i} out of range")
        x = np.asarray(x, dtype=float)
        if self.data is not None:
            S = self._shards[i]
            return self.shift * x - S.T @ (S @ x) / self.n + self.b_vec
        return self.hessians[i].mean(axis=0) @ x + self.b_vec

    def local_grads(self, X: np.ndarray) -> np.ndarray:
        """Stack of grad f_i(x_i) for an (m, d) agent stack, one row per agent."""
        X = np.asarray(X, dtype=float)
        if self.data is not None:
            t = np.einsum("ind,id->in", self._shards, X)
            return self.shift * X - np.einsum("in,ind->id", t, self._shards) / self.n + self.b_vec
        return np.einsum("inde,ie->id", self.hessians, X) / self.n + self.b_vec

    def batch_grad_diff(self, X_now: np.ndarray, X_anchor: np.ndarray,
                        batches: np.ndarray) -> np.ndarray:
        """Row i: (1/b) sum_{j in batches[i]} (grad f_{i,j}(x_i) - grad f_{i,j}(x0_i))."""
        batches = np.asarray(batches)
        if batches.min() < 0 or batches.max() >= self.n:
            raise IndexError("batch index out of range")
        b = batches.shape[1]
        delta = np.asarray(X_now, dtype=float) - np.asarray(X_anchor, dtype=float)
        if self.data is not None:
            D = self._shards[np.arange(self.m)[:, None], batches]  # (m, b, d)
            t = np.einsum("mbd,md->mb", D, delta)
            return (self.shift * b * delta - np.einsum("mb,mbd->md", t, D)) / b
        Q = self.hessians[np.arange(self.m)[:, None], batches]  # (m, b, d, d)
        return np.einsum("mbde,me->md", Q, delta) / b

    def smooth_value(self, x: np.ndarray) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ (self.global_hessian() @ x) + self.b_vec @ x)

    def objective_value(self, x: np.ndarray) -> float:
        """F(x) = f(x) + psi(x)."""
        return self.smooth_value(x) + self.regularizer.value(x)

    def global_grad(self, x: np.ndarray) -> np.ndarray:
        """Gradient of the smooth part f only; psi is handled by prox."""
        return self.global_hessian() @ np.asarray(x, dtype=float) + self.b_vec

    # --- derived instances ----------------------------------------------------

    def flatten(self) -> "ProblemInstance":
        """All m*n components as a single agent's shard (centralized view)."""
        if self.m == 1:
            return self
        if self.data is not None:
            return ProblemInstance(1, self.m * self.n, self.d, self.regularizer,
                                   self.b_vec, data=self.data, shift=self.shift,
                                   meta=self.meta)
        return ProblemInstance(1, self.m * self.n, self.d, self.regularizer,
                               self.b_vec,
                               hessians=self.hessians.reshape(1, -1, self.d, self.d),
                               meta=self.meta)

    def with_regularizer(self, reg: Regularizer) -> "ProblemInstance":
        if self.data is not None:
            return ProblemInstance(self.m, self.n, self.d, reg, self.b_vec,
                                   data=self.data, shift=self.shift, meta=self.meta)
        return ProblemInstance(self.m, self.n, self.d, reg, self.b_vec,
                               hessians=self.hessians, meta=self.meta)


class OracleInstance:
    """Sharded objective defined by per-component value/gradient callables.

    The solvers consume the same method surface as ProblemInstance; the
    smoothness and convexity constants cannot be derived from black-box
    oracles and must be supplied. Loop-based, so meant for small problems or
    custom objectives, not the benchmark path.
    """

    def __init__(self, m, n, d, component_value, component_grad, *,
                 L, ell1, ell2, sigma_f, regularizer=None):
        self.m, self.n, self.d = int(m), int(n), int(d)
        self._value = component_value
        self._grad = component_grad
        self.regularizer = regularizer if regularizer is not None else Regularizer()
        self.L, self.ell1, self.ell2 = float(L), float(ell1), float(ell2)
        self.sigma_f = float(sigma_f)
        if not self.ell2 >= self.ell1 > 0:
            raise ValueError("constants must satisfy ell2 >= ell1 > 0")

    @property
    def sigma(self) -> float:
        return self.sigma_f + self.regularizer.sigma_psi

    def _check_index(self, i, j):
        if not (0 <= i < self.m and 0 <= j < self.n):
            raise IndexError(f"component ({i}, {j}) out of range for {self.m}x{self.n}")

    def component_value(self, i, j, x):
        self._check_index(i, j)
        return float(self._value(i, j, np.asarray(x, dtype=float)))

    def component_grad(self, i, j, x):
        self._check_index(i, j)
        return np.asarray(self._grad(i, j, np.asarray(x, dtype=float)), dtype=float)

    def local_full_grad(self, i, x):
        return np.mean([self.component_grad(i, j, x) for j in range(self.n)], axis=0)

    def local_grads(self, X):
        return np.stack([self.local_full_grad(i, X[i]) for i in range(self.m)])

    def batch_grad_diff(self, X_now, X_anchor, batches):
        batches = np.asarray(batches)
        out = np.zeros((self.m, self.d))
        for i in range(self.m):
            for j in batches[i]:
                out[i] += (self.component_grad(i, int(j), X_now[i])
                           - self.component_grad(i, int(j), X_anchor[i]))
        return out / batches.shape[1]

    def smooth_value(self, x):
        total = sum(self.component_value(i, j, x)
                    for i in range(self.m) for j in range(self.n))
        return total / (self.m * self.n)

    def objective_value(self, x):
        return self.smooth_value(x) + self.regularizer.value(x)

    def global_grad(self, x):
        return np.mean([self.local_full_grad(i, x) for i in range(self.m)], axis=0)

    def flatten(self):
        if self.m == 1:
            return self
        n = self.n
        value = lambda _i, j, x: self._value(j // n, j % n, x)
        grad = lambda _i, j, x: self._grad(j // n, j % n, x)
        return OracleInstance(1, self.m * n, self.d, value, grad,
                              L=self.L, ell1=self.ell1, ell2=self.ell2,
                              sigma_f=self.sigma_f, regularizer=self.regularizer)

    def with_regularizer(self, reg):
        return OracleInstance(self.m, self.n, self.d, self._value, self._grad,
                              L=self.L, ell1=self.ell1, ell2=self.ell2,
                              sigma_f=self.sigma_f, regularizer=reg)


def smoothness_constants(inst: ProblemInstance) -> dict:
    """L, ell1, ell2, sigma_f of a quadratic instance via dense eigensolves.

    sigma_f/L are the extreme eigenvalues of the global Hessian; ell1 bounds
    component curvature above, ell2 below (clamped so ell2 >= ell1).
    """
    if not isinstance(inst, ProblemInstance):
        raise ValueError("smoothness constants require a quadratic instance")
    H = inst.global_hessian()
    ev = np.linalg.eigvalsh(H)
    sigma_f, L = float(ev[0]), float(ev[-1])
    if inst.data is not None:
        c = inst.shift
        # spectrum of c*I - a a^T is {c - ||a||^2, c, ..., c}
        ell1 = c
        ell2 = max(c, float((inst.data * inst.data).sum(axis=1).max()) - c)
    else:
        comp_ev = np.linalg.eigvalsh(inst.hessians.reshape(-1, inst.d, inst.d))
        ell1 = float(comp_ev[:, -1].max())
        ell2 = max(ell1, float(-comp_ev[:, 0].min()))
    return {"L": L, "ell1": ell1, "ell2": ell2, "sigma_f": sigma_f}


def make_shift_invert_pca(data: DataMatrix, m: int, r: float,
                          b_seed: int = 0) -> ProblemInstance:
    """Shift-and-invert PCA subproblem over the Gram matrix of `data`.

    F(x) = x^T (c I - A) x / 2 + b^T x with A = (m n)^{-1} sum a a^T and
    c = lam1 + (lam1 - lam2) / r, so sigma_f = (lam1 - lam2) / r; r tunes the
    conditioning. Rows are sharded contiguously across the m agents; b is a
    seeded standard normal direction scaled to unit norm.
    """
    if r <= 0:
        raise ValueError(f"conditioning ratio must be positive, got {r}")
    if data.rows % m != 0:
        raise ValueError(f"{data.rows} rows not divisible by {m} agents")
    N, d = data.rows, data.cols
    A = data.values.T @ data.values / N
    ev = np.linalg.eigvalsh(A)
    lam1 = float(ev[-1])
    lam2 = float(ev[-2]) if d > 1 else 0.0
    if lam1 - lam2 <= 1e-12:
        raise DegenerateEigengap(f"top eigengap {lam1 - lam2} too small")
    c = lam1 + (lam1 - lam2) / r
    rng = np.random.default_rng(b_seed)
    b_vec = rng.standard_normal(d)
    b_vec /= np.linalg.norm(b_vec)
    meta = {"lam1": lam1, "lam2": lam2, "gap": lam1 - lam2, "c": c, "r": r}
    return ProblemInstance(m, N // m, d, Regularizer(), b_vec,
                           data=data.values, shift=c, meta=meta)


def make_quadratic(hessians: np.ndarray, b_vec: np.ndarray,
                   regularizer: Regularizer = Regularizer()) -> ProblemInstance:
    """Instance from explicit per-component Hessians, shape (m, n, d, d)."""
    hessians = np.asarray(hessians, dtype=float)
    m, n, d = hessians.shape[0], hessians.shape[1], hessians.shape[2]
    return ProblemInstance(m, n, d, regularizer, b_vec, hessians=hessians)


def closed_form_minimizer(inst: ProblemInstance) -> np.ndarray:
    """x* = -(H + ridge*I)^{-1} b for smooth quadratics (psi without an l1 part)."""
    if not isinstance(inst, ProblemInstance):
        raise ValueError("closed form requires a quadratic instance")
    if inst.regularizer.lam != 0:
        raise ValueError("closed form requires psi in {none, squared_l2}")
    H = inst.global_hessian() + inst.regularizer.ridge * np.eye(inst.d)
    try:
        np.linalg.cholesky(H)
    except np.linalg.LinAlgError as exc:
        raise ValueError("smooth Hessian is not positive definite") from exc
    x_star = np.linalg.solve(H, -inst.b_vec)
    resid = np.linalg.norm(H @ x_star + inst.b_vec)
    if resid > 1e-10 * max(np.linalg.norm(inst.b_vec), 1.0):
        raise ValueError(f"minimizer residual {resid} too large")
    return x_star


def regularize_epsilon(inst: ProblemInstance, eps_f: float) -> ProblemInstance:
    """Add (eps_f/2)||x||^2 to psi, making F eps_f-strongly convex.

    The term lives in the prox; the smooth oracles are unchanged.
    """
    if eps_f <= 0:
        raise ValueError(f"eps_f must be positive, got {eps_f}")
    reg = replace(inst.regularizer, ridge=inst.regularizer.ridge + eps_f)
    return inst.with_regularizer(reg)
