"""Acceptance suite: nine criteria, one PASS/FAIL line each.

Lines are printed even under pytest's output capture.  Run alone with
``pytest tests/test_acceptance.py``.
"""

import json
import math
import time

import numpy as np
import pytest

from helpers import random_scale
from subjump import (
    EffectiveScale,
    HeatKernelModel,
    SamplerConfig,
    ScaleFunction,
    SubordinatorSampler,
    build_graph,
    build_levy_measure,
    certify_effective_bounds,
    criterion_equivalent,
    criterion_integral,
    effective_scale_eval,
    exit_time_diffusion,
    exit_time_subordinated,
    exponent_rule,
    jump_kernel,
    laplace_exponent,
    truncated_laplace_exponent,
    verify_corollary_inequalities,
    verify_jump_comparability,
)
from subjump.cli import main

P = ScaleFunction.power
SQUARE = P(2.0)
MIXED = ScaleFunction(1.0, ((1.0, 1.5), (math.inf, 3.0)))


@pytest.fixture
def verdict(capsys):
    start = time.perf_counter()

    def emit(number, ok, detail):
        line = f"ACCEPTANCE {number}: {'PASS' if ok else 'FAIL'} ({time.perf_counter() - start:.1f}s) {detail}"
        with capsys.disabled():
            print("\n" + line)
        assert ok, line

    return emit


def test_1_stable_chain_identity(verdict):
    worst, shapes = 0.0, True
    for alpha in (0.5, 1.0, 1.5):
        nu = build_levy_measure(SQUARE, P(alpha))
        shapes &= nu.density.exponents == (-1 - alpha / 2,) and math.isclose(nu.density.coefs[0], 1.0, rel_tol=1e-15)
        rho = alpha / 2
        for lam in np.logspace(-3, 3, 25):
            exact = math.gamma(1 - rho) / rho * lam**rho
            worst = max(worst, abs(laplace_exponent(nu, lam) / exact - 1))
    verdict(1, shapes and worst < 1e-6, f"density t^(-1-alpha/2) exact={shapes}, max rel err of phi {worst:.2e} (tol 1e-6)")


def test_2_jump_kernel_closed_form(verdict):
    worst = 0.0
    for n in (1, 2, 3):
        model = HeatKernelModel.gaussian(n)
        for alpha in (0.5, 1.0, 1.5):
            nu = build_levy_measure(SQUARE, P(alpha))
            for d in np.logspace(-2, 2, 9):
                exact = 2 ** (alpha - 1) * math.pi ** (-n / 2) * math.gamma((n + alpha) / 2) * d ** (-(n + alpha))
                worst = max(worst, abs(jump_kernel(model, nu, d) / exact - 1))
    verdict(2, worst < 1e-5, f"max rel err {worst:.2e} over n in 1..3, alpha in (0.5, 1, 1.5), d in [1e-2, 1e2] (tol 1e-5)")


def test_3_criterion_trichotomy(verdict):
    rng = np.random.default_rng(2024)
    disagreements, ratios, n_div = 0, [], 0
    for _ in range(500):
        c, j = random_scale(rng), random_scale(rng)
        a, b, rule = criterion_integral(c, j), criterion_equivalent(c, j), exponent_rule(c, j)
        if not (math.isfinite(a) == math.isfinite(b) == rule):
            disagreements += 1
        if math.isfinite(a) and math.isfinite(b):
            ratios.append(a / b)
        else:
            n_div += 1
    ratios = np.array(ratios)
    K = float(max(ratios.max(), 1 / ratios.min()))
    ok = disagreements == 0 and math.isfinite(K) and np.all(ratios > 0)
    verdict(3, ok, f"{disagreements} disagreements in 500 pairs ({n_div} divergent); battery ratio bound K = {K:.4g}")


def test_4_necessity_gate(verdict, tmp_path, capsys):
    pairs = [(SQUARE, SQUARE), (SQUARE, P(2.5)), (MIXED, MIXED), (P(2.5), ScaleFunction(2.0, ((0.1, 3.0), (math.inf, 1.0))))]
    codes = []
    for i, (c, j) in enumerate(pairs):
        cfg = {
            "psi_c": c.to_json(), "psi_j": j.to_json(), "sampler": {"seed": 1},
            "model": {"kind": "subgaussian", "alpha_v": 2.0} if c != SQUARE else {"kind": "gaussian", "n": 1},
        }
        path = tmp_path / f"c{i}.json"
        path.write_text(json.dumps(cfg))
        for command in ("subordinator", "jumpkernel", "effscale", "simulate"):
            code = main([command, "--config", str(path), "--out", str(tmp_path / f"o{i}")])
            err = capsys.readouterr().err
            codes.append(code == 2 and "criterion divergent" in err)
    verdict(4, all(codes), f"{sum(codes)}/{len(codes)} construction requests on divergent pairs refused with exit code 2")


def test_5_effective_scale(verdict):
    r = np.logspace(-4, 4, 81)
    stable_err = max(
        float(np.max(np.abs(effective_scale_eval(SQUARE, P(a), r) / ((2 - a) * r**a) - 1))) for a in (0.5, 1.0, 1.5)
    )
    mixed_err = abs(effective_scale_eval(SQUARE, MIXED, 100.0) / (1e4 / (3 - 1 / 100)) - 1)
    cases = [
        (SQUARE, P(0.5)), (SQUARE, P(1.0)), (SQUARE, P(1.5)), (SQUARE, MIXED), (P(2.5), P(2.0)),
        (P(2.5), ScaleFunction(1.0, ((0.01, 1.2), (math.inf, 2.8)))),
        (ScaleFunction(1.0, ((1.0, 2.0), (math.inf, 2.5))), P(1.0)),
        (ScaleFunction(0.5, ((0.1, 3.0), (10.0, 2.0), (math.inf, 2.3))), ScaleFunction(2.0, ((1.0, 1.5), (math.inf, 0.8)))),
        (P(math.log(5) / math.log(2)), P(1.7)),
        (SQUARE, ScaleFunction(1.0, ((1e-2, 0.6), (1e2, 1.9), (math.inf, 4.0)))),
    ]
    grid = np.logspace(-4, 4, 33)
    checks = [verify_corollary_inequalities(c, j, grid) for c, j in cases]
    worst_drift = max(max(ch.drift.values()) for ch in checks)
    ok = stable_err < 1e-9 and mixed_err < 1e-9 and all(ch.passed for ch in checks)
    verdict(
        5, ok,
        f"stable closed form err {stable_err:.1e}, mixed psi_hat(100) err {mixed_err:.1e} (tol 1e-9); "
        f"{sum(ch.passed for ch in checks)}/10 corollary cases finite and stable, worst drift {worst_drift:.2e} (tol 0.05)",
    )


def test_6_comparability(verdict):
    psi_c, psi_j = P(2.5), SQUARE
    model = HeatKernelModel.subgaussian(psi_c, 2.0)
    rep = verify_jump_comparability(model, build_levy_measure(psi_c, psi_j), psi_j, model.volume, np.logspace(-2, 2, 17))
    ok = rep.passed and rep.ratio_min >= 1 / rep.C_emp and rep.ratio_max <= rep.C_emp and abs(rep.log_slope) < 0.05
    verdict(6, ok, f"C_emp = {rep.C_emp:.4g}, ratio in [{rep.ratio_min:.4g}, {rep.ratio_max:.4g}], log-slope {rep.log_slope:.2e}/decade, end-decade slope {rep.end_slope:.2e} (tol 0.05)")


def test_7_monte_carlo_exit_times(verdict):
    z1, z2 = build_graph({"kind": "lattice", "n": 1}), build_graph({"kind": "lattice", "n": 2})
    parts, ok = [], True

    ruin = exit_time_diffusion(z1, radii=[4, 8, 16, 32], paths_per_radius=10_000, seed=101)
    z = max(abs(m - r * r) / s for r, m, s in zip(ruin.radii, ruin.mean_exit, ruin.stderr))
    ok &= z <= 3
    parts.append(f"Z1 max |mean - r^2|/SE = {z:.2f}")

    e2 = exit_time_diffusion(z2, radii=[8, 16, 32, 64], paths_per_radius=10_000, seed=102)
    ok &= abs(e2.fitted_exponent - 2.0) <= 0.15
    parts.append(f"Z2 exponent {e2.fitted_exponent:.3f}")

    sg = exit_time_diffusion(build_graph({"kind": "sierpinski", "level": 8}), radii=[4, 8, 16, 32], paths_per_radius=10_000, seed=103)
    ok &= abs(sg.fitted_exponent - math.log(5) / math.log(2)) <= 0.15
    parts.append(f"SG8 exponent {sg.fitted_exponent:.3f}")

    radii = [16, 32, 64, 128]
    cfg = SamplerConfig(epsilon=0.5, seed=104)
    st = exit_time_subordinated(z1, build_levy_measure(SQUARE, P(1.0)), cfg, radii=radii, paths=10_000)
    ok &= abs(st.fitted_exponent - 1.0) <= 0.2
    mx = exit_time_subordinated(z1, build_levy_measure(SQUARE, MIXED), cfg, radii=radii, paths=10_000)
    ok &= abs(mx.fitted_exponent - 2.0) <= 0.25
    hat = EffectiveScale.build(SQUARE, MIXED)
    hat_slope = float(np.polyfit(np.log(radii), np.log(hat(np.array(radii, dtype=float))), 1)[0])
    ok &= abs(mx.fitted_exponent - hat_slope) <= 0.25
    parts.append(f"stable alpha=1 exponent {st.fitted_exponent:.3f}; mixed exponent {mx.fitted_exponent:.3f} vs psi_hat slope {hat_slope:.3f}")
    verdict(7, ok, "; ".join(parts))


def test_8_sampler(verdict):
    N, worst = 10**5, 0.0
    for k, psi_j in enumerate((P(1.0), MIXED)):
        nu, eps = build_levy_measure(SQUARE, psi_j), 1e-3
        S = SubordinatorSampler(nu, eps).increments(np.random.default_rng(800 + k), 1.0, N)
        for lam in (0.5, 1.0, 2.0):
            e = np.exp(-lam * S)
            z = abs(e.mean() - math.exp(-truncated_laplace_exponent(nu, lam, eps))) / (e.std(ddof=1) / math.sqrt(N))
            worst = max(worst, z)
    monotone = True
    for psi_j in (P(1.0), MIXED):
        nu = build_levy_measure(SQUARE, psi_j)
        for lam in (0.5, 1.0, 2.0):
            gaps = [abs(truncated_laplace_exponent(nu, lam, e) - laplace_exponent(nu, lam)) for e in (1e-2, 1e-3, 1e-4)]
            monotone &= gaps[0] > gaps[1] > gaps[2]
    verdict(8, worst <= 3 and monotone, f"max |z| = {worst:.2f} (tol 3) at N=1e5; epsilon refinement monotone: {monotone}")


def test_9_determinism(verdict, tmp_path):
    cfg = {
        "psi_c": SQUARE.to_json(), "psi_j": P(1.0).to_json(), "model": {"kind": "gaussian", "n": 1},
        "sampler": {"epsilon": 0.01, "seed": 99, "samples": 20000},
        "simulate": {"radii": [4, 8, 16, 32], "paths": 2000, "tail_samples": 20000},
    }
    path = tmp_path / "stable.json"
    path.write_text(json.dumps(cfg))
    runs = []
    for i, w in enumerate((1, 4, 8, 1)):
        out = tmp_path / f"run{i}"
        code = main(["report", "--config", str(path), "--out", str(out), "--workers", str(w)])
        runs.append((code, {p.name: p.read_bytes() for p in sorted(out.iterdir())}))
    identical = all(r[1] == runs[0][1] for r in runs[1:])
    ok = identical and all(code == 0 for code, _ in runs) and len(runs[0][1]) >= 7
    verdict(9, ok, f"{len(runs[0][1])} artifacts byte-identical across workers 1, 4, 8 and a repeat: {identical}")
