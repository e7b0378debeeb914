"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The heavy benchmark (Bernoulli 2048x20, m=8, random two-neighbor gossip,
r in {2, 300}) is run once in a module fixture and shared across criteria.
Run with `pytest tests/test_acceptance.py -s` to see the per-criterion lines.

Known red: PMGT-SVRG at r=300 cannot reach 1e-8 within 400 epochs on this
instance class (its per-epoch decay is capped by exp(-2 t0 eta sigma) along
the bottleneck eigenmode and eta >= ~1.3 diverges); see the build notes. The
criterion is asserted as stated and fails for exactly that combination.
"""

import math
import time

import numpy as np
import pytest

from gossipopt import (DataMatrix, EpochState, GossipMatrix, build_lazy_ring,
                       build_random_two_neighbor, closed_form_minimizer,
                       consensus_error, contraction_bound, default_hyperparams,
                       fast_mix, gen_bernoulli_matrix, make_quadratic,
                       make_shift_invert_pca, regularize_epsilon, row_average,
                       run_centralized_svrg, run_nids, run_pgextra,
                       run_pmgt_katyushax, run_pmgt_svrg, sample_geometric,
                       vr_estimator)

BUDGET_EPOCHS = 400
TARGET = 1e-8


def check(name, ok, detail=""):
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
    assert ok, f"{name}: {detail}"


@pytest.fixture(scope="module")
def bench():
    """Shared desk-scale reproduction runs (Fig. 1 analogue)."""
    data = gen_bernoulli_matrix(2048, 20, 13)
    W = build_random_two_neighbor(8, 3)
    out = {"W": W}
    inst2 = make_shift_invert_pca(data, 8, 2.0)
    inst300 = make_shift_invert_pca(data, 8, 300.0)
    out["inst"] = {2.0: inst2, 300.0: inst300}

    cfg_k2 = default_hyperparams(inst2, W, K=60, seed=7, eta=0.4)
    out["kat", 2.0] = run_pmgt_katyushax(inst2, cfg_k2, W)
    out["cfg_kat", 2.0] = cfg_k2
    cfg_s2 = default_hyperparams(inst2, W, K=60, seed=7, eta=0.8)
    out["svrg", 2.0] = run_pmgt_svrg(inst2, cfg_s2, W)
    out["cfg_svrg", 2.0] = cfg_s2

    tau300 = min(0.5, 1.8 * math.sqrt(16 * 1.0 * inst300.sigma) / 2.0)
    cfg_k300 = default_hyperparams(inst300, W, K=BUDGET_EPOCHS, seed=7, eta=1.0, tau=tau300)
    out["kat", 300.0] = run_pmgt_katyushax(inst300, cfg_k300, W)
    out["cfg_kat", 300.0] = cfg_k300
    # K = 2000 so the 1e-6 crossing needed by the ordering criterion is
    # observable; the convergence criterion is judged on the first 400 epochs
    cfg_s300 = default_hyperparams(inst300, W, K=2000, seed=7, eta=1.2)
    out["svrg", 300.0] = run_pmgt_svrg(inst300, cfg_s300, W)
    out["cfg_svrg", 300.0] = cfg_s300

    out["pgextra", 300.0] = run_pgextra(inst300, 0.4, W, 50_000)
    out["nids", 300.0] = run_nids(inst300, 0.4, W, 50_000)
    return out


def test_gossip_invariant_suite():
    start = time.perf_counter()
    rng = np.random.default_rng(100)
    for _ in range(100):
        if rng.random() < 0.5:
            G = build_lazy_ring(int(rng.integers(2, 17)), float(rng.uniform(0.5, 0.95)))
        else:
            G = build_random_two_neighbor(int(rng.integers(3, 41)), int(rng.integers(0, 2**32)))
        G.validate()
    worst_avg, contraction_ok = 0.0, True
    for _ in range(200):
        G = build_lazy_ring(int(rng.integers(2, 17)), float(rng.uniform(0.5, 0.9)))
        X = rng.normal(size=(G.m, 3))
        M = int(rng.integers(0, 21))
        Y = fast_mix(X, G, M)
        worst_avg = max(worst_avg, float(np.abs(row_average(Y) - row_average(X)).max()))
        if consensus_error(Y) > contraction_bound(G.lambda2, M) * consensus_error(X) + 1e-12:
            contraction_ok = False
    elapsed = time.perf_counter() - start
    check("gossip_invariant_suite",
          worst_avg <= 1e-12 and contraction_ok and elapsed < 10.0,
          f"(avg drift {worst_avg:.1e}, {elapsed:.1f}s)")


def test_fastmix_hand_case():
    W = GossipMatrix(np.full((2, 2), 0.5), 0.0, 2)
    out = fast_mix(np.array([[1.0], [0.0]]), W, 1)
    err = float(np.abs(out - np.array([[0.25], [0.75]])).max())
    check("fastmix_hand_case", err <= 1e-14, f"(err {err:.1e})")


def test_oracle_equivalence():
    rng = np.random.default_rng(21)
    inst = make_shift_invert_pca(DataMatrix(rng.normal(size=(32, 4))), 1, 2.0)
    W1 = build_lazy_ring(1, 0.5)
    cfg = default_hyperparams(inst, W1, K=5, seed=11, M=0)
    dec = run_pmgt_svrg(inst, cfg, W1)
    cen = run_centralized_svrg(inst, cfg)
    worst = max(abs(a.f_value - b.f_value) for a, b in zip(dec.rows, cen.rows))
    worst_x = float(np.abs(dec.meta["x_final"] - cen.meta["x_final"]).max())
    check("oracle_equivalence", worst <= 1e-12 and worst_x <= 1e-12,
          f"(F diff {worst:.1e}, x diff {worst_x:.1e})")


def test_vr_unbiasedness():
    rng = np.random.default_rng(22)
    inst = make_shift_invert_pca(DataMatrix(rng.normal(size=(32, 4))), 2, 2.0)
    w0 = rng.normal(size=(2, 4))
    w = rng.normal(size=(2, 4))
    mu = rng.normal(size=(2, 4))
    state = EpochState(w=w, s=mu, v=mu, mu=mu, w0=w0)
    expect = mu + np.stack([inst.local_full_grad(i, w[i]) - inst.local_full_grad(i, w0[i])
                            for i in range(2)])
    draws = np.empty((10_000, 2, 4))
    for trial in range(draws.shape[0]):
        batches = rng.integers(0, inst.n, size=(2, 4))
        draws[trial] = vr_estimator(inst, state, batches)
    se = draws.std(axis=0, ddof=1) / math.sqrt(draws.shape[0])
    dev = np.abs(draws.mean(axis=0) - expect)
    check("vr_unbiasedness", bool(np.all(dev <= 3 * se + 1e-12)),
          f"(max dev/SE {float((dev / se).max()):.2f})")


def test_geometric_sampler():
    rng = np.random.default_rng(23)
    mean = float(np.mean([sample_geometric(1.0 / 8.0, rng) for _ in range(100_000)]))
    check("geometric_sampler", abs(mean - 7.0) <= 0.3, f"(mean {mean:.3f})")


@pytest.mark.parametrize("solver,r", [("kat", 2.0), ("svrg", 2.0),
                                      ("kat", 300.0), ("svrg", 300.0)])
def test_convergence_reproduction(bench, solver, r):
    trace = bench[solver, r]
    rows = trace.rows[:BUDGET_EPOCHS + 1]
    crossing = next((row.epoch for row in rows if row.subopt <= TARGET), None)
    sub = np.array([max(row.subopt, 1e-300) for row in rows])
    upto = crossing + 1 if crossing is not None else len(sub)
    slope = float(np.polyfit(np.arange(upto), np.log(sub[:upto]), 1)[0])
    runtime = rows[-1].wall
    check(f"convergence_reproduction[{solver}-r{r:g}]",
          crossing is not None and slope < 0 and runtime < 120.0,
          f"(reached {TARGET:g} at epoch {crossing}, slope {slope:.3f}, {runtime:.0f}s)")


def test_ill_conditioning_ordering(bench):
    sfo_kat = bench["kat", 300.0].sfo_to_reach(1e-6)
    sfo_svrg = bench["svrg", 300.0].sfo_to_reach(1e-6)
    parts = [f"kat {sfo_kat:g}", f"svrg {sfo_svrg:g}"]
    ok = math.isfinite(sfo_kat) and math.isfinite(sfo_svrg) and sfo_kat < sfo_svrg
    for name in ("pgextra", "nids"):
        trace = bench[name, 300.0]
        sfo = trace.sfo_to_reach(1e-6)
        if math.isinf(sfo):
            # censored: still above 1e-6 after its whole run, so its crossing
            # SFO exceeds the total SFO spent, which must dominate SVRG's
            total = trace.rows[-1].sfo
            ok = ok and trace.min_subopt() > 1e-6 and total > sfo_svrg
            parts.append(f"{name} >{total:g}")
        else:
            ok = ok and sfo > sfo_svrg
            parts.append(f"{name} {sfo:g}")
    # at r=2 the gap may shrink but KatyushaX must stay within 2x of SVRG
    k2 = bench["kat", 2.0].sfo_to_reach(1e-6)
    s2 = bench["svrg", 2.0].sfo_to_reach(1e-6)
    ok = ok and math.isfinite(k2) and math.isfinite(s2) and k2 <= 2 * s2
    parts.append(f"r2 ratio {k2 / s2:.2f}")
    check("ill_conditioning_ordering", ok, "(" + ", ".join(parts) + ")")


def test_counter_exactness(bench):
    ok = True
    for solver, extra_calls in (("kat", 3), ("svrg", 1)):
        trace, cfg = bench[solver, 2.0], bench[f"cfg_{solver}", 2.0]
        n = bench["inst"][2.0].n
        sfo, calls = n, 1
        if (trace.rows[0].sfo, trace.rows[0].comm) != (sfo, cfg.M):
            ok = False
        for k, T in enumerate(trace.inner_lengths):
            sfo += n + 2 * cfg.b * (T + 1)
            calls += extra_calls + 2 * (T + 1)
            if (trace.rows[k + 1].sfo, trace.rows[k + 1].comm) != (sfo, cfg.M * calls):
                ok = False
    check("counter_exactness", ok)


def test_smoothness_constant_checks(bench):
    rng = np.random.default_rng(24)
    parts, ok = [], True
    for r, inst in bench["inst"].items():
        # independent eigensolver oracle on the raw Gram matrix
        A = inst.data.T @ inst.data / inst.data.shape[0]
        ev = np.linalg.eigvalsh(A)
        dev = abs(inst.sigma_f - (ev[-1] - ev[-2]) / r)
        ok = ok and dev <= 1e-8
        parts.append(f"r{r:g} dev {dev:.1e}")
    inst = bench["inst"][300.0]
    violations = 0
    for _ in range(1000):
        i, j = int(rng.integers(inst.m)), int(rng.integers(inst.n))
        x, y = rng.normal(size=inst.d), rng.normal(size=inst.d)
        resid = (inst.component_value(i, j, x) - inst.component_value(i, j, y)
                 - inst.component_grad(i, j, y) @ (x - y))
        gap_sq = float((x - y) @ (x - y))
        if not (-inst.ell2 / 2 * gap_sq - 1e-9 <= resid <= inst.ell1 / 2 * gap_sq + 1e-9):
            violations += 1
    ok = ok and violations == 0
    check("smoothness_constant_checks", ok,
          "(" + ", ".join(parts) + f", curvature violations {violations})")


def test_epsilon_regularization():
    rng = np.random.default_rng(4)
    m, n, d = 2, 8, 3
    q1 = rng.uniform(0.5, 2.0, size=(m, n))
    q2 = rng.uniform(0.5, 2.0, size=(m, n))
    q1[0, 0] = -0.5  # one nonconvex component
    Q = np.zeros((m, n, d, d))
    Q[..., 0, 0] = q1
    Q[..., 1, 1] = q2
    b_vec = np.array([0.7, -0.4, 0.0])
    inst = make_quadratic(Q, b_vec)
    assert inst.sigma == 0.0
    # flat direction is unpenalized: the sigma=0 optimum is known in closed form
    f_star = -0.5 * (b_vec[0]**2 / q1.mean() + b_vec[1]**2 / q2.mean())
    reg = regularize_epsilon(inst, 1e-4)
    W = build_lazy_ring(m, 0.5)
    cfg = default_hyperparams(reg, W, K=200, seed=5, eta=0.3)
    trace = run_pmgt_katyushax(reg, cfg, W)
    gap = inst.objective_value(trace.meta["x_final"]) - f_star
    check("epsilon_regularization", 0.0 <= gap <= 1e-3, f"(F gap {gap:.2e})")
