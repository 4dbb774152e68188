"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (run with ``pytest tests/test_acceptance.py -v -s``)."""

import json
import time

import numpy as np
import pytest

from avatarforge.backends import GenerationRequest, mock_suite
from avatarforge.backends.mock import MockGenerator, MockPoseDetector
from avatarforge.backends.wire import image_digest
from avatarforge.cli import main as cli_main
from avatarforge.compose import harmonic_inpaint, soft_matte
from avatarforge.media import (
    FrameSequence,
    ImageBuffer,
    MaskMap,
    to_gray,
    write_pose_file,
    write_sequence,
)
from avatarforge.metrics import (
    EmbeddingVector,
    cosine_consistency,
    cosine_similarity,
    frame_l1,
    frame_mse,
    pose_mse,
)
from avatarforge.nss import (
    MVGModel,
    brisque_features,
    brisque_score,
    fit_aggd,
    fit_ggd,
    fit_mvg,
    niqe_features,
    niqe_score,
)
from avatarforge.pipeline import (
    PipelineConfig,
    PromptSpec,
    background_stage,
    build_interframe_dataset,
    build_intra_dataset,
    refine_prompts,
    synthesize_video,
)
from test_nss_brisque import random_model, score_oracle
from test_nss_fitting import sample_ggd
from util import add_gaussian_noise, random_pose, standing_pose

SPEC = PromptSpec(clothes="red hoodie", face="young woman", background="city park")


def _report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"ACCEPTANCE {name}: {status}{suffix}")
    assert ok, f"{name}{suffix}"


def test_ggd_recovery():
    t0 = time.perf_counter()
    worst = 0.0
    for i, shape in enumerate((0.5, 1.0, 2.0, 4.0)):
        fit = fit_ggd(sample_ggd(shape, 100_000, seed=700 + i))
        worst = max(worst, abs(fit.alpha - shape) / shape)
    elapsed = time.perf_counter() - t0
    _report(
        "GGD recovery",
        worst <= 0.05 and elapsed < 5.0,
        f"worst rel err {worst:.3%}, {elapsed:.2f}s",
    )


def test_aggd_mirror_symmetry():
    ok = True
    for seed in range(8):
        s = np.random.default_rng(800 + seed).standard_normal(4_000)
        fit = fit_aggd(np.concatenate([s, -s]))
        ok &= fit.mean_eta == 0.0
        ok &= abs(fit.sigma_l_sq - fit.sigma_r_sq) < 1e-12
    _report("AGGD symmetry", ok)


def test_niqe_analytic_cases():
    rng = np.random.default_rng(810)
    a_mat = rng.standard_normal((36, 36))
    cov_a = a_mat @ a_mat.T + 36 * np.eye(36)
    model_a = MVGModel(mean=rng.standard_normal(36), cov=(cov_a + cov_a.T) / 2)
    self_zero = niqe_score(model_a, model_a) == 0.0

    mean_b = np.zeros(36)
    mean_b[0] = 1.0
    eye_a = MVGModel(mean=np.zeros(36), cov=np.eye(36))
    eye_b = MVGModel(mean=mean_b, cov=np.eye(36))
    unit = abs(niqe_score(eye_a, eye_b) - 1.0) <= 1e-9

    b_mat = rng.standard_normal((36, 36))
    cov_b = b_mat @ b_mat.T + 36 * np.eye(36)
    model_b = MVGModel(mean=rng.standard_normal(36), cov=(cov_b + cov_b.T) / 2)
    symmetric = niqe_score(model_a, model_b) == niqe_score(model_b, model_a)

    _report("NIQE analytic cases", self_zero and unit and symmetric)


def test_brisque_svr_oracle():
    rng = np.random.default_rng(820)
    worst = 0.0
    for _ in range(50):
        model = random_model(rng, int(rng.integers(1, 40)))
        feats = rng.uniform(-4, 2, 36)
        worst = max(worst, abs(brisque_score(feats, model) - score_oracle(feats, model)))
    _report("BRISQUE SVR oracle", worst <= 1e-12, f"worst |diff| {worst:.2e}")


def test_quality_directionality(photos, svr_model, pristine_model):
    assert len(photos) >= 5
    increases = []
    for i, photo in enumerate(photos):
        noisy = add_gaussian_noise(photo, sigma=0.1, seed=9_000 + i)
        gray_clean, gray_noisy = to_gray(photo), to_gray(noisy)
        b_up = brisque_score(brisque_features(gray_noisy), svr_model) > brisque_score(
            brisque_features(gray_clean), svr_model
        )
        n_clean = niqe_score(fit_mvg(niqe_features(gray_clean)), pristine_model)
        n_noisy = niqe_score(fit_mvg(niqe_features(gray_noisy)), pristine_model)
        increases.append(b_up and n_noisy > n_clean)
    _report(
        "Quality directionality",
        all(increases),
        f"{sum(increases)}/{len(increases)} photos",
    )


def test_harmonic_inpaint_gradient():
    x = np.linspace(0.1, 0.9, 128)
    plane = (x[None, :] + x[:, None]) / 2.0
    mask = np.zeros((128, 128))
    mask[48:80, 48:80] = 1.0
    t0 = time.perf_counter()
    out = harmonic_inpaint(ImageBuffer(plane), MaskMap(mask))
    elapsed = time.perf_counter() - t0
    err = float(np.abs(out.data[:, :, 0] - plane).max())
    _report(
        "Harmonic inpaint",
        err < 1e-3 and elapsed < 2.0,
        f"max err {err:.2e}, {elapsed:.2f}s",
    )


def _walk(n, size):
    return [standing_pose(size * 0.4 + 6 * t, size * 0.5) for t in range(n)]


def test_background_consistency_invariant():
    cfg = PipelineConfig(backends=mock_suite(), width=128, height=128, seed=77)
    poses = _walk(4, 128)
    seq, _ = synthesize_video(SPEC, poses, cfg)
    _, masks = background_stage(refine_prompts(SPEC, None), poses, cfg)
    union = np.zeros((128, 128), dtype=bool)
    for m in masks:
        union |= soft_matte(m, cfg.feather_width).data > 0.0
    outside = ~union
    first = seq.frames[0].data[outside]
    identical = all(np.array_equal(f.data[outside], first) for f in seq.frames)
    _report(
        "Background consistency",
        identical and outside.any(),
        f"{int(outside.sum())} pixels outside the matte union",
    )


def test_pose_round_trip():
    gen, det = MockGenerator(), MockPoseDetector()
    rng = np.random.default_rng(830)
    errors = []
    for _ in range(20):
        pose = random_pose(rng, 512, 512, margin=8)
        frame = gen.generate(
            GenerationRequest(prompt="round trip", pose=pose, seed=13, width=512, height=512)
        )
        errors.append(pose_mse(pose, det.detect(frame), 512, 512))
    mean_err = float(np.mean(errors))

    cfg = PipelineConfig(backends=mock_suite(), width=128, height=128, seed=78)
    t0 = time.perf_counter()
    seq, _ = synthesize_video(SPEC, _walk(8, 128), cfg)
    for frame in seq.frames:
        cfg.backends.pose_detector.detect(frame)
    elapsed = time.perf_counter() - t0
    _report(
        "Pose round trip",
        mean_err <= 0.05 and elapsed < 10.0,
        f"mean pose mse {mean_err:.4f}, 8-frame synth+detect {elapsed:.2f}s",
    )


def test_autoregressive_contract():
    cfg = PipelineConfig(backends=mock_suite(), width=128, height=128, seed=79)
    seq, trace = synthesize_video(SPEC, _walk(4, 128), cfg)
    flags_ok = [f.prev_frame_used for f in trace.frames] == [False, True, True, True]
    digests_ok = trace.frames[0].prev_frame_digest is None and all(
        trace.frames[t].prev_frame_digest == image_digest(seq.frames[t - 1])
        for t in range(1, len(seq))
    )
    ordered = [f.index for f in trace.frames] == list(range(len(seq)))
    _report("Autoregressive contract", flags_ok and digests_ok and ordered)


def test_dataset_builders(tmp_path):
    rng = np.random.default_rng(840)
    lengths = [int(rng.integers(2, 8)) for _ in range(6)]
    videos = [
        FrameSequence(
            frames=tuple(
                ImageBuffer(rng.integers(0, 256, (8, 8, 3)) / 255.0) for _ in range(n)
            )
        )
        for n in lengths
    ]

    class Cap:
        def caption(self, image):
            return "c"

    job = build_interframe_dataset(videos, Cap(), tmp_path / "inter")
    law_ok = len(job.pairs) == sum(n - 1 for n in lengths)

    arr = rng.integers(0, 256, (40, 40, 3)) / 255.0
    boxes = [(3, 6, 20, 30), (0, 0, 12, 12)]
    intra = build_intra_dataset(
        [ImageBuffer(arr)], lambda i: boxes, "clothes", "cap", tmp_path / "intra"
    )
    from avatarforge.media import load_frame

    crops_ok = all(
        np.array_equal(load_frame(p["image"]).data, arr[y0:y1, x0:x1])
        for p, (x0, y0, x1, y1) in zip(intra.pairs, boxes)
    )
    _report("Dataset builders", law_ok and crops_ok, f"{len(job.pairs)} triplets")


def test_metric_trivia():
    rng = np.random.default_rng(850)
    a = ImageBuffer(rng.random((8, 8, 3)))
    b = ImageBuffer(rng.random((8, 8, 3)))
    zero_on_equal = frame_mse(a, a) == 0.0 and frame_l1(a, a) == 0.0
    symmetric = frame_mse(a, b) == frame_mse(b, a) and frame_l1(a, b) == frame_l1(b, a)

    lo = ImageBuffer(np.zeros((8, 8, 3)))
    hi = ImageBuffer(np.full((8, 8, 3), 10 / 255))
    offsets_ok = abs(frame_mse(lo, hi) - 100.0) < 1e-9 and abs(frame_l1(lo, hi) - 10.0) < 1e-9

    e = EmbeddingVector(rng.standard_normal(16))
    identity_ok = abs(cosine_consistency([e, e]) - 100.0) < 1e-9
    bounds_ok = all(
        -100.0 - 1e-9
        <= cosine_similarity(
            EmbeddingVector(rng.standard_normal(16)), EmbeddingVector(rng.standard_normal(16))
        )
        <= 100.0 + 1e-9
        for _ in range(25)
    )
    _report(
        "Metric trivia",
        zero_on_equal and symmetric and offsets_ok and identity_ok and bounds_ok,
    )


def test_full_run_determinism(tmp_path):
    config = tmp_path / "config.toml"
    config.write_text(
        "[pipeline]\nwidth = 64\nheight = 64\nseed = 9\nfeather_width = 2\n"
        '\n[prompts]\nclothes = "red hoodie"\nface = "young woman"\nbackground = "city park"\n'
    )
    pose_file = tmp_path / "poses.json"
    write_pose_file([standing_pose(24 + 4 * t, 32, scale=7) for t in range(3)], pose_file)

    outputs = []
    for run in ("a", "b"):
        out = tmp_path / f"run_{run}"
        rep = tmp_path / f"rep_{run}"
        assert cli_main(["synthesize", "--config", str(config), "--poses", str(pose_file),
                         "--out", str(out)]) == 0
        assert cli_main(["evaluate", "--frames", str(out), "--poses", str(pose_file),
                         "--prompt", "a walk in the park", "--out", str(rep)]) == 0
        frame_bytes = b"".join(p.read_bytes() for p in sorted(out.glob("frame_*.png")))
        outputs.append(
            (
                frame_bytes,
                (out / "trace.json").read_bytes(),
                (rep / "report.json").read_bytes(),
                (rep / "report.csv").read_bytes(),
                (rep / "report.md").read_bytes(),
            )
        )
    _report("Determinism", outputs[0] == outputs[1])


def test_report_layout(tmp_path):
    frame_a = ImageBuffer(np.full((32, 32, 3), 0.25))
    frame_b = ImageBuffer(np.full((32, 32, 3), 0.35))
    frames_dir = tmp_path / "frames"
    write_sequence(FrameSequence(frames=(frame_a, frame_b), fps=24.0), frames_dir)
    out = tmp_path / "report"
    assert cli_main(["evaluate", "--frames", str(frames_dir), "--out", str(out)]) == 0
    md = (out / "report.md").read_text()
    expectations = [
        ("Frame NIQE", "↓"), ("Body NIQE", "↓"), ("Background NIQE", "↓"),
        ("Frame BRISQUE", "↓"), ("Body BRISQUE", "↓"), ("Background BRISQUE", "↓"),
        ("Pose MES", "↓"), ("Text Alignment", "↑"),
        ("Frame MSE", "↓"), ("Frame L1", "↓"),
        ("Frame CLIP", "↑"), ("Body CLIP", "↑"), ("Background CLIP", "↑"),
    ]
    ok = all(f"{name} {arrow}" in md for name, arrow in expectations)
    _report("Report layout", ok, "13 metric names with direction arrows")
