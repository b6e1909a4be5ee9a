"""Acceptance gate: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines. The shim smoke test (criterion 8) needs a real monocular model and
is skipped unless TOMDEPTH_SHIM_CMD is set; see README.
"""

import hashlib
import math
import os
import subprocess
import time
from pathlib import Path

import numpy as np
import pytest

from tomdepth import (
    DELTA_THRESHOLDS,
    ScalarMap,
    Space,
    bad_tau,
    delta_accuracy,
    error_metrics,
    evaluate_sample,
    fit_affine_lse,
    median_aggregate,
    read_pfm,
    read_png16_depth,
    write_pfm,
    write_png16_depth,
)
from tomdepth.cli import main

from conftest import build_synthetic_dataset
from oracles import lse_oracle, median_oracle
from test_formats import build_pfm_bytes


def ok(line: str) -> None:
    print(f"[PASS] {line}")


def test_criterion_1_lse_oracle_equivalence():
    rng = np.random.default_rng(20240001)
    instances = []
    for _ in range(100):
        n = int(rng.integers(10, 1001))
        pred = rng.uniform(0.01, 100.0, size=(1, n))
        alpha = rng.uniform(0.1, 10.0) * rng.choice([-1.0, 1.0])
        beta = rng.uniform(-50.0, 50.0)
        target = alpha * pred + beta + rng.normal(0, rng.uniform(0.01, 2.0), size=pred.shape)
        instances.append((pred, target))

    t0 = time.perf_counter()
    fits = [
        fit_affine_lse(
            ScalarMap(p, None, Space.AFFINE_INVERSE_DEPTH),
            ScalarMap(t, None, Space.AFFINE_INVERSE_DEPTH),
            np.ones(p.shape, dtype=bool),
        )
        for p, t in instances
    ]
    elapsed = time.perf_counter() - t0

    worst = 0.0
    for (p, t), fit in zip(instances, fits):
        ref_a, ref_b = lse_oracle(p, t)
        rel_a = abs(fit.scale - ref_a) / max(abs(ref_a), 1e-30)
        rel_b = abs(fit.shift - ref_b) / max(abs(ref_b), 1e-30)
        worst = max(worst, rel_a, rel_b)
        assert rel_a <= 1e-9 and rel_b <= 1e-9
    assert elapsed < 1.0
    ok(f"criterion 1: LSE matches brute-force oracle on 100 instances "
       f"(worst rel err {worst:.2e}, fit time {elapsed * 1000:.1f} ms)")


def test_criterion_2_median_oracle_equivalence():
    rng = np.random.default_rng(20240002)
    checked = 0
    for n in range(1, 8):
        quorum = math.ceil(n / 2)
        for _ in range(50):
            vals = [rng.uniform(0, 100, size=(6, 5)) for _ in range(n)]
            valid = [rng.random((6, 5)) < rng.uniform(0.3, 1.0) for _ in range(n)]
            stack = [ScalarMap(v, m, Space.DISPARITY_PX) for v, m in zip(vals, valid)]
            out = median_aggregate(stack)
            ref_vals, ref_valid = median_oracle(vals, valid)
            assert np.array_equal(out.valid, ref_valid)
            assert np.array_equal(out.values[ref_valid], ref_vals[ref_valid])
            count = np.sum(valid, axis=0)
            assert np.array_equal(out.valid, count >= quorum)  # quorum rule
            checked += 1
    ok(f"criterion 2: median equals sort oracle exactly on {checked} stacks, N in 1..7, quorum verified")


def test_criterion_3_metric_fixtures_and_monotonicity():
    ones = np.ones((1, 2), dtype=bool)
    g = ScalarMap(np.array([[100.0, 100.0]]), None, Space.DEPTH_MM)
    p = ScalarMap(np.array([[120.0, 200.0]]), None, Space.DEPTH_MM)
    assert abs(delta_accuracy(p, g, ones, 1.25) - 50.0) <= 1e-12

    g2 = ScalarMap(np.array([[100.0, 200.0]]), None, Space.DEPTH_MM)
    p2 = ScalarMap(np.array([[110.0, 190.0]]), None, Space.DEPTH_MM)
    mae, abs_rel, rmse = error_metrics(p2, g2, ones)
    assert abs(mae - 10.0) <= 1e-12
    assert abs(rmse - 10.0) <= 1e-12
    assert abs(abs_rel - 0.075) <= 1e-12

    ones4 = np.ones((1, 4), dtype=bool)
    gd = ScalarMap(np.array([[10.0, 10.0, 10.0, 10.0]]), None, Space.DISPARITY_PX)
    pd = ScalarMap(np.array([[10.0, 13.0, 15.0, 10.0]]), None, Space.DISPARITY_PX)
    assert abs(bad_tau(pd, gd, ones4, 2.0) - 50.0) <= 1e-12

    rng = np.random.default_rng(20240003)
    sel = np.ones((6, 6), dtype=bool)
    for _ in range(200):
        gv = rng.uniform(20, 500, size=(6, 6))
        pv = gv * rng.uniform(0.6, 1.6, size=(6, 6))
        gm = ScalarMap(gv, None, Space.DEPTH_MM)
        pm = ScalarMap(pv, None, Space.DEPTH_MM)
        accs = [delta_accuracy(pm, gm, sel, t) for t in DELTA_THRESHOLDS]
        assert all(a <= b for a, b in zip(accs, accs[1:]))
        mae, _, rmse = error_metrics(pm, gm, sel)
        assert mae <= rmse + 1e-12

        gdv = rng.uniform(0, 60, size=(6, 6))
        pdv = np.abs(gdv + rng.normal(0, 5, size=(6, 6)))
        gdm = ScalarMap(gdv, None, Space.DISPARITY_PX)
        pdm = ScalarMap(pdv, None, Space.DISPARITY_PX)
        rates = [bad_tau(pdm, gdm, sel, t) for t in (2.0, 4.0, 6.0, 8.0)]
        assert all(a >= b for a, b in zip(rates, rates[1:]))
    ok("criterion 3: hand-enumerated metric fixtures reproduce to 1e-12; "
       "monotonicity holds on 200 random fixtures")


def _tree_hash(root: Path) -> dict:
    return {
        str(p.relative_to(root)): hashlib.sha256(p.read_bytes()).hexdigest()
        for p in sorted(root.rglob("*"))
        if p.is_file()
    }


def _stereo_argv(ds, out, workers=1):
    return [
        "distill", "stereo",
        "--manifest", str(ds["manifest"]),
        "--out", str(out),
        "--strategy", "stereo_merged",
        "--stereo-backend", f"dir:disparity_px:{ds['stereo_dir']}",
        "--mono-backend", f"dir:affine_inverse_depth:{ds['mono_dir']}",
        "--seed", "0",
        "--workers", str(workers),
    ]


def test_criterion_4_end_to_end_synthetic_distillation(tmp_path):
    ids = [f"s{k}" for k in range(8)]
    ds = build_synthetic_dataset(tmp_path / "data", ids)
    out = tmp_path / "out"

    t0 = time.perf_counter()
    assert main(_stereo_argv(ds, out)) == 0
    elapsed = time.perf_counter() - t0
    assert elapsed < 10.0

    worst = 0.0
    for k, sid in enumerate(ids):
        label = read_pfm(out / "labels" / f"{sid}.pfm")
        assert label.valid.all()
        worst = max(worst, float(np.abs(label.values - ds["disp"]).max()))
        assert np.abs(label.values - ds["disp"]).max() <= 1e-6

        # non-ToM region must be bit-identical to the stereo backend output
        base = read_pfm(Path(ds["stereo_dir"]) / f"{sid}_base.pfm")
        from tomdepth.formats import read_class_raster

        mask = read_class_raster(tmp_path / "data" / "masks" / f"{sid}.png") != 0
        label_bits = label.values.astype(np.float32).view(np.uint32)
        base_bits = base.values.astype(np.float32).view(np.uint32)
        assert np.array_equal(label_bits[~mask], base_bits[~mask])
    ok(f"criterion 4: 8-sample merged distillation matches GT disparity "
       f"(worst abs err {worst:.2e} <= 1e-6), non-ToM bit-identical, {elapsed:.2f} s < 10 s")


def test_criterion_5_determinism_across_worker_counts(tmp_path):
    ids = [f"s{k}" for k in range(8)]
    ds = build_synthetic_dataset(tmp_path / "data", ids)

    hashes = {}
    for workers in (1, 8):
        stereo_out = tmp_path / f"stereo_w{workers}"
        mono_out = tmp_path / f"mono_w{workers}"
        assert main(_stereo_argv(ds, stereo_out, workers=workers)) == 0
        assert main([
            "distill", "mono",
            "--manifest", str(ds["manifest"]),
            "--out", str(mono_out),
            "--backend", f"dir:affine_inverse_depth:{ds['mono_dir']}",
            "--seed", "0",
            "--workers", str(workers),
        ]) == 0
        hashes[workers] = (_tree_hash(stereo_out), _tree_hash(mono_out))
    assert hashes[1] == hashes[8]
    n_files = sum(len(h) for h in hashes[1])
    ok(f"criterion 5: worker counts 1 and 8 produce byte-identical trees ({n_files} files hashed)")


def test_criterion_6_eval_rescaling_invariance():
    rng = np.random.default_rng(20240006)
    for trial in range(20):
        gv = rng.uniform(100, 2000, size=(12, 12))
        base_pred = 0.002 * gv + rng.normal(0, 0.05, size=gv.shape)
        gt = ScalarMap(gv, None, Space.DEPTH_MM)
        pred = ScalarMap(base_pred, None, Space.AFFINE_INVERSE_DEPTH)
        reference = evaluate_sample(pred, gt, rescale="lse")

        alpha = rng.uniform(0.1, 10.0)
        beta = rng.uniform(-50.0, 50.0)
        distorted = ScalarMap(alpha * base_pred + beta, None, Space.AFFINE_INVERSE_DEPTH)
        again = evaluate_sample(distorted, gt, rescale="lse")
        for r1, r2 in zip(reference, again):
            assert r1.count == r2.count
            if r1.empty:
                continue
            assert math.isclose(r1.mae, r2.mae, rel_tol=1e-9, abs_tol=1e-9)
            assert math.isclose(r1.rmse, r2.rmse, rel_tol=1e-9, abs_tol=1e-9)
            assert math.isclose(r1.abs_rel, r2.abs_rel, rel_tol=1e-9, abs_tol=1e-9)
            for t in r1.delta:
                assert math.isclose(r1.delta[t], r2.delta[t], rel_tol=1e-9, abs_tol=1e-9)
    ok("criterion 6: LSE-rescaled reports invariant under 20 random affine distortions "
       "(alpha in [0.1,10], beta in [-50,50], within 1e-9)")


def test_criterion_7_format_round_trips(tmp_path):
    # PFM with an invalid (+inf) pixel: read -> write is byte-exact
    f = tmp_path / "fix.pfm"
    f.write_bytes(build_pfm_bytes(3, 2, [[1.5, float("inf"), 2.5], [0.0, 4.5, 5.5]]))
    m = read_pfm(f)
    assert not m.valid[0, 1]
    g = tmp_path / "copy.pfm"
    write_pfm(m, g)
    assert g.read_bytes() == f.read_bytes()

    # our own writer round-trips bit-exactly through a second write
    rng = np.random.default_rng(20240007)
    vals = rng.uniform(0, 100, size=(7, 5))
    valid = rng.random((7, 5)) < 0.8
    ours = tmp_path / "ours.pfm"
    write_pfm(ScalarMap(vals, valid, Space.DISPARITY_PX), ours)
    again = tmp_path / "again.pfm"
    write_pfm(read_pfm(ours), again)
    assert ours.read_bytes() == again.read_bytes()

    # 16-bit PNG depth: 0 sentinel -> invalid -> 0 sentinel
    depth_vals = np.array([[1.0, 500.0], [65535.0, 3.0]])
    depth_valid = np.array([[True, False], [True, True]])
    dm = ScalarMap(depth_vals, depth_valid, Space.DEPTH_MM)
    p1 = tmp_path / "d1.png"
    write_png16_depth(dm, p1)
    back = read_png16_depth(p1)
    assert np.array_equal(back.valid, depth_valid)
    assert np.array_equal(back.values[depth_valid], depth_vals[depth_valid])
    p2 = tmp_path / "d2.png"
    write_png16_depth(back, p2)
    assert p1.read_bytes() == p2.read_bytes()
    ok("criterion 7: PFM and 16-bit PNG round-trips byte-exact, +inf/0 invalid handling verified")


@pytest.mark.skipif(
    "TOMDEPTH_SHIM_CMD" not in os.environ,
    reason="criterion 8 (secondary) needs a local monocular model; "
    "set TOMDEPTH_SHIM_CMD to a command template with {input} and {output}",
)
def test_criterion_8_shim_smoke(tmp_path):
    from tomdepth import RgbImage
    from tomdepth.formats import write_rgb

    template = os.environ["TOMDEPTH_SHIM_CMD"]
    img = RgbImage(np.full((96, 128, 3), 127, dtype=np.uint8))
    inp = tmp_path / "input.png"
    outp = tmp_path / "pred.pfm"
    write_rgb(img, inp)
    argv = [tok.replace("{input}", str(inp)).replace("{output}", str(outp))
            for tok in template.split()]
    result = subprocess.run(argv, capture_output=True, text=True)
    assert result.returncode == 0, result.stderr
    pred = read_pfm(outp, space=Space.AFFINE_INVERSE_DEPTH)
    assert (pred.width, pred.height) == (img.width, img.height)

    # 3-image mono distillation through the exec backend
    ds = build_synthetic_dataset(tmp_path / "data", ["m0", "m1", "m2"], width=96, height=96)
    out = tmp_path / "out"
    code = main([
        "distill", "mono",
        "--manifest", str(ds["manifest"]),
        "--out", str(out),
        "--backend", f"exec:affine_inverse_depth:{template}",
        "--colors", "2",
        "--seed", "0",
    ])
    assert code == 0
    ok("criterion 8: shim produced parseable PFMs and a 3-image exec-backend distillation run")
