"""Acceptance gate: one test per criterion, each run at its stated tolerance.

Every test records a pass/fail line in ``conftest.ACCEPTANCE``; the lines are
printed in the pytest terminal summary.
"""

import os
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE
from h2h import classifier
from h2h.descriptor import cell_histograms, descriptor_length, h2h_descriptor
from h2h.experiment import grid_search, load_config, parse_config, run
from h2h.gradients import gradient_fields
from h2h.linalg import full_svd, gram_inverse, soft_threshold, svt
from h2h.solver import SolverConfig, solve
from h2h.synthetic import make_toy_dataset

from oracles import (argmax_first, histograms_loops, linearized_admm, planted_instance,
                     singular_values_eigh, soft_threshold_scalar, svt_eigh)


def record(key, ok, detail):
    ACCEPTANCE[key] = ("PASS" if ok else "FAIL", detail)
    print(f"criterion {key}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, detail


def test_criterion_1_operators():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    failures = []
    trials = 1000

    # listed examples
    st = np.vectorize(soft_threshold_scalar)
    if [soft_threshold(np.array([[v]]), xi)[0, 0] for v, xi in
            ((1.2, 0.5), (-0.3, 0.5), (-2.0, 1.0))] != [pytest.approx(0.7), 0.0, -1.0]:
        failures.append("soft_threshold examples")
    if not np.allclose(svt(np.diag([3.0, 1.0]), 2.0), np.diag([1.0, 0.0]), atol=1e-12):
        failures.append("svt diagonal example")
    if svt(np.zeros((3, 2)), 0.7).any():
        failures.append("svt zero example")
    q, _ = np.linalg.qr(rng.standard_normal((7, 3)))
    if not (np.allclose(gram_inverse(q), 0.5 * np.eye(3), atol=1e-12)
            and np.array_equal(gram_inverse(np.zeros((4, 3))), np.eye(3))):
        failures.append("gram_inverse examples")
    f = full_svd(np.diag([5.0, 3.0]))
    if not (np.allclose(f.sigma, [5, 3]) and np.allclose(np.abs(f.u), np.eye(2))
            and np.allclose(full_svd(np.eye(2)).sigma, [1, 1])):
        failures.append("full_svd examples")

    for t in range(trials):
        p, r = rng.integers(1, 9, size=2)
        scale = 10.0 ** rng.uniform(-3, 3)
        w = scale * rng.standard_normal((p, r))
        xi = scale * rng.uniform(0, 2)
        # soft threshold: piecewise definition, non-expansiveness
        s = soft_threshold(w, xi)
        if not np.array_equal(s, st(w, xi)):
            failures.append(f"soft_threshold trial {t}")
        b = w + scale * rng.standard_normal((p, r))
        if np.linalg.norm(s - soft_threshold(b, xi)) > np.linalg.norm(w - b) * (1 + 1e-12):
            failures.append(f"non-expansive trial {t}")
        # svt: oracle, shrunk spectrum, identity at tau = 0
        tau = float(rng.uniform(0, 1.5) * np.linalg.norm(w, 2))
        out = svt(w, tau)
        fro = np.linalg.norm(w)
        if np.linalg.norm(out - svt_eigh(w, tau)) > 1e-8 * fro:
            failures.append(f"svt oracle trial {t}")
        want = np.maximum(singular_values_eigh(w) - tau, 0)
        if np.max(np.abs(singular_values_eigh(out) - want)) > 1e-8 * fro:
            failures.append(f"svt spectrum trial {t}")
        if np.linalg.norm(svt(w, 0.0) - w) > 1e-8 * fro:
            failures.append(f"svt identity trial {t}")
        # full SVD: orthonormality, ordering, reconstruction
        fac = full_svd(w)
        k = fac.sigma.size
        if (np.max(np.abs(fac.u.T @ fac.u - np.eye(k))) > 1e-8
                or np.max(np.abs(fac.vt @ fac.vt.T - np.eye(k))) > 1e-8
                or np.any(np.diff(fac.sigma) > 0) or np.any(fac.sigma < 0)
                or np.linalg.norm(fac.reconstruct() - w) > 1e-10 * fro):
            failures.append(f"full_svd trial {t}")
        # gram inverse: identity residual and symmetry
        x = scale * rng.standard_normal((rng.integers(1, 12), rng.integers(1, 8)))
        c = gram_inverse(x)
        n = x.shape[1]
        if (np.max(np.abs(c @ (x.T @ x + np.eye(n)) - np.eye(n))) > 1e-8
                or np.max(np.abs(c - c.T)) > 1e-10):
            failures.append(f"gram_inverse trial {t}")
    elapsed = time.perf_counter() - start
    ok = not failures and elapsed < 60
    record("1", ok, f"{trials} randomized trials per operator in {elapsed:.1f}s; "
                    f"failures: {failures[:5] or 'none'}")


def test_criterion_2_descriptor():
    rng = np.random.default_rng(2)
    mismatched = 0
    for _ in range(100):
        p, q = rng.integers(8, 41, size=2)
        cell = int(rng.integers(2, min(p, q) // 2 + 1))
        bins = int(rng.integers(2, 13))
        fields = gradient_fields(rng.random((p, q)))
        cells = cell_histograms(fields, cell, bins)
        if not (np.array_equal(cells.hog, histograms_loops(fields.theta, fields.magnitude,
                                                           cell, bins))
                and np.array_equal(cells.hoh, histograms_loops(fields.phi, fields.strength,
                                                               cell, bins))):
            mismatched += 1
    bad_length = 0
    for _ in range(100):
        p, q = rng.integers(4, 120, size=2)
        cell = int(rng.integers(2, 12))
        bins = int(rng.integers(2, 18))
        if p // cell < 2 or q // cell < 2:
            continue
        k = (p // cell - 1) * (q // cell - 1)
        d = h2h_descriptor(rng.random((p, q)), cell, bins)
        if not d.values.size == descriptor_length(p, q, cell, bins) == 8 * bins * k:
            bad_length += 1
    worst = 0.0
    for _ in range(100):
        img = rng.random((int(rng.integers(16, 64)), int(rng.integers(16, 64))))
        c = 10.0 ** rng.uniform(-3, 3)
        base = h2h_descriptor(img, 8, 9).values
        worst = max(worst, float(np.max(np.abs(h2h_descriptor(c * img, 8, 9).values - base))))
    ok = mismatched == 0 and bad_length == 0 and worst <= 1e-12
    record("2", ok, f"histogram mismatches {mismatched}/100, length errors {bad_length}, "
                    f"max scale deviation {worst:.2e}")


def test_criterion_3a_random_feasibility():
    rng = np.random.default_rng(3)
    failed = []
    worst = 0.0
    for i in range(50):
        d = int(rng.integers(2, 61))
        n = int(rng.integers(1, 31))
        m = int(rng.integers(1, 11))
        x = rng.standard_normal((d, n))
        x /= np.linalg.norm(x, axis=0)
        y = rng.standard_normal((d, m))
        rep = solve(x, y)
        worst = max(worst, rep.feasibility)
        if not (rep.converged and rep.feasibility < 1e-6 and rep.iterations <= 500):
            failed.append(i)
    record("3a", not failed, f"50 random instances, unconverged {failed or 'none'}, "
                             f"worst feasibility {worst:.2e}")


def test_criterion_3b_planted_rank_one():
    failed = {}
    for seed in range(10):
        x, z_star, e_star, y = planted_instance(seed)
        rep = solve(x, y)
        rel = np.linalg.norm(x @ rep.z + rep.e - y) / np.linalg.norm(y)
        s = np.linalg.svd(rep.e, compute_uv=False)
        ratio = s[1] / s[0]
        if not (rel < 1e-5 and ratio < 1e-6):
            failed[seed] = f"{ratio:.1e}"
    record("3b", not failed, f"planted sparse + rank-1 at default settings, seeds 0-9; "
                             f"failing seeds (sigma2/sigma1): {failed or 'none'}")


def test_criterion_3c_independent_oracle():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((4, 3))
    y = rng.standard_normal((4, 2))
    rep = solve(x, y, SolverConfig(lam=0.1, alpha=1.0))
    _, _, ref = linearized_admm(x, y, 0.1, 1.0)
    rel = abs(rep.objective - ref) / ref
    record("3c", rel <= 1e-3, f"tiny instance objective {rep.objective:.6f} vs "
                              f"reference {ref:.6f}, relative gap {rel:.2e}")


def test_criterion_4_complexity_shape():
    rng = np.random.default_rng(4)
    d, n = 7128, 263
    x = rng.standard_normal((d, n))
    x /= np.linalg.norm(x, axis=0)
    c = gram_inverse(x)
    cfg = SolverConfig(tol=0.0, max_iter=10)
    per_iter = []
    for m in (8, 16, 32, 64):
        y = rng.standard_normal((d, m))
        best = min(solve(x, y, cfg, c=c, record_trace=False).wall_time for _ in range(5))
        per_iter.append(best / cfg.max_iter)
    ratios = [b / a for a, b in zip(per_iter, per_iter[1:])]
    record("4", max(ratios) <= 3.0,
           "per-iteration ms " + ", ".join(f"{1e3 * t:.1f}" for t in per_iter)
           + "; doubling ratios " + ", ".join(f"{r:.2f}" for r in ratios))


EYB_GRID = """
[grid]
cell = 6, 8
bins = 9, 12
lambda = 0.01, 0.1
alpha = 1, 10
"""


def _eyb_manifest():
    manifest = os.environ.get("H2H_EYB_MANIFEST")
    if manifest:
        return Path(manifest)
    root = os.environ.get("H2H_EYB_ROOT")
    if root:
        from h2h.dataset import eyb_manifest, write_manifest

        path = Path(root) / "h2h_eyb_manifest.csv"
        write_manifest(path, eyb_manifest(root))
        return path
    return None


@pytest.mark.slow
@pytest.mark.parametrize("role, threshold", [("test1", 97.0), ("test2", 96.0)])
def test_criterion_5_extended_yale_b(tmp_path, role, threshold):
    key = f"5-{'subset4' if role == 'test1' else 'subset5'}"
    manifest = _eyb_manifest()
    if manifest is None:
        ACCEPTANCE[key] = ("SKIP", "set H2H_EYB_ROOT or H2H_EYB_MANIFEST to run")
        pytest.skip("Extended Yale B data not supplied")
    text = (f"[dataset]\nprotocol = EYB\nmanifest = {manifest}\ntest_role = {role}\n"
            f"[output]\ndir = {tmp_path / 'out'}\n" + EYB_GRID)
    best, report = grid_search(parse_config(text))
    rate = best["recognition_rate"]
    record(key, rate >= threshold,
           f"best {rate:.2f}% (threshold {threshold}%) at cell={best['cell']} "
           f"bins={best['bins']} lambda={best['lambda']:g} alpha={best['alpha']:g}")


def test_criterion_6_classifier():
    rng = np.random.default_rng(6)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 30))
        n_tr = int(rng.integers(1, 40))
        eta = 10.0 ** rng.uniform(-2, 2)
        z = rng.standard_normal((n, n_tr))
        h = classifier.LabelMatrix.from_labels(rng.integers(0, 5, n_tr)).h
        w = classifier.ridge_weights(z, h, eta)
        worst = max(worst, float(np.max(np.abs(w @ (z @ z.T + eta * np.eye(n)) - h @ z.T))))
    mismatches = 0
    for _ in range(1000):
        c, m = rng.integers(1, 10, size=2)
        s = rng.integers(-3, 4, size=(c, m)).astype(float)
        if classifier.predict_indices(s, np.eye(m)).tolist() != argmax_first(s):
            mismatches += 1
    ok = worst <= 1e-8 and mismatches == 0
    record("6", ok, f"max normal-equation residual {worst:.2e} over 100 fits; "
                    f"argmax mismatches {mismatches}/1000")


def test_criterion_7_toy_determinism(tmp_path):
    make_toy_dataset(tmp_path / "data", seed=0)
    outputs = []
    for k in range(2):
        cfg_path = tmp_path / f"run{k}.ini"
        cfg_path.write_text("[dataset]\nmanifest = data/manifest.csv\ncrop = 32x32\n"
                            "[output]\ndir = out\nseed = 0\n")
        cfg = load_config(cfg_path)
        cfg.output_dir = tmp_path / f"out{k}"
        report = run(cfg)
        outputs.append((report.rows[0]["recognition_rate"],
                        (cfg.output_dir / "results.csv").read_bytes(),
                        (cfg.output_dir / "report.txt").read_bytes()))
    (r0, csv0, txt0), (r1, csv1, txt1) = outputs
    ok = r0 == r1 == 100.0 and csv0 == csv1 and txt0 == txt1
    record("7", ok, f"toy recognition {r0:.1f}% / {r1:.1f}%, results.csv identical "
                    f"{csv0 == csv1}, report.txt identical {txt0 == txt1}")
