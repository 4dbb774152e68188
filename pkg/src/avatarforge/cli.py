"""Command-line surface: synthesize, evaluate, compose, dataset.

Exit codes are a stable contract: 0 success, 1 usage or input problems,
2 backend/runtime failures (partial outputs are kept). Report bodies are
byte-stable; run metadata goes to a separate sidecar file.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import nss, pipeline
from .backends import BackendSuite, http_suite, mock_suite
from .errors import (
    AvatarForgeError,
    BackendError,
    EmptyDatasetError,
    FormatError,
    PipelineAbort,
    PipelineError,
)
from .media import load_frame, load_mask, load_sequence, read_pose_file, save_frame, save_mask
from .pipeline import PipelineConfig, PromptSpec

ENDPOINT_ENV = "AVATARFORGE_ENDPOINT"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_BACKEND = 2


def _load_toml(path: Path) -> dict:
    if not path.is_file():
        raise FormatError(f"no such config file: {path}")
    try:
        return tomllib.loads(path.read_text())
    except tomllib.TOMLDecodeError as exc:
        raise FormatError(f"config file is not valid TOML: {path}: {exc}") from exc


def _build_suite(args, config: dict) -> BackendSuite:
    backend_cfg = config.get("backend", {})
    kind = args.backend or backend_cfg.get("kind", "mock")
    if kind == "mock":
        return mock_suite()
    if kind == "http":
        endpoint = args.endpoint or backend_cfg.get("endpoint") or os.environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise FormatError(
                f"http backend needs --endpoint, a [backend].endpoint config entry, "
                f"or the {ENDPOINT_ENV} environment variable"
            )
        return http_suite(endpoint)
    raise FormatError(f"unknown backend kind {kind!r} (expected mock or http)")


def _prompt_spec(config: dict) -> PromptSpec:
    prompts = config.get("prompts", {})
    missing = [k for k in ("clothes", "face", "background") if not prompts.get(k)]
    if missing:
        raise FormatError(f"config [prompts] section is missing {', '.join(missing)}")
    return PromptSpec(
        clothes=prompts["clothes"], face=prompts["face"], background=prompts["background"]
    )


def _pipeline_config(args, config: dict, suite: BackendSuite) -> PipelineConfig:
    p = config.get("pipeline", {})
    seed = args.seed if args.seed is not None else int(p.get("seed", 0))
    return PipelineConfig(
        backends=suite,
        guidance_scale=float(p.get("guidance_scale", 7.5)),
        steps=int(p.get("steps", 25)),
        fps=float(p.get("fps", 24)),
        width=int(p.get("width", 512)),
        height=int(p.get("height", 512)),
        feather_width=int(p.get("feather_width", 3)),
        seed=seed,
        adapter_job_dir=Path(p.get("adapter_job_dir", "adapter_jobs")),
    )


def _load_models(args, config: dict):
    models = config.get("models", {})
    svr_path = args.svr_model or models.get("svr") or None
    niqe_path = args.niqe_model or models.get("niqe") or None
    svr = nss.load_svr_model(svr_path) if svr_path else None
    pristine = nss.load_pristine_model(niqe_path) if niqe_path else None
    return svr, pristine


def _write_run_meta(out_dir: Path, argv: list[str]) -> None:
    meta = {"argv": argv, "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z")}
    (out_dir / "run_meta.json").write_text(json.dumps(meta, indent=2) + "\n")


def cmd_synthesize(args) -> int:
    config = _load_toml(Path(args.config))
    poses_path = Path(args.poses)
    if not poses_path.is_file():
        raise FormatError(f"no such pose file: {poses_path}")
    poses = read_pose_file(poses_path)
    if not poses:
        raise FormatError(f"pose file has no frames: {poses_path}")
    suite = _build_suite(args, config)
    pcfg = _pipeline_config(args, config, suite)
    spec = _prompt_spec(config)
    out_dir = Path(args.out)
    seq, _trace = pipeline.synthesize_video(spec, poses, pcfg, out_dir=out_dir)
    print(f"frames={len(seq)} fps={seq.fps:g} out={out_dir}")
    return EXIT_OK


def _load_masks_dir(masks_dir: Path):
    paths = sorted(masks_dir.glob("mask_*.png"))
    if not paths:
        raise FormatError(f"no mask_*.png files in {masks_dir}")
    return [load_mask(p) for p in paths]


def cmd_evaluate(args) -> int:
    frames_dir = Path(args.frames)
    if not frames_dir.is_dir():
        raise FormatError(f"no such frames directory: {frames_dir}")
    seq = load_sequence(frames_dir)
    if len(seq) == 0:
        raise FormatError(f"frames directory is empty: {frames_dir}")
    config = _load_toml(Path(args.config)) if args.config else {}
    suite = _build_suite(args, config)
    poses = read_pose_file(args.poses) if args.poses else None
    masks = _load_masks_dir(Path(args.masks)) if args.masks else None
    svr, pristine = _load_models(args, config)
    prompt = args.prompt if args.prompt else None

    report = pipeline.evaluate_video(
        seq,
        pose_seq=poses,
        prompt=prompt,
        masks=masks,
        suite=suite,
        svr_model=svr,
        pristine_model=pristine,
    )
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.json").write_text(report.to_json())
    (out_dir / "report.csv").write_text(report.to_csv())
    (out_dir / "report.md").write_text(report.to_markdown())
    _write_run_meta(out_dir, sys.argv[1:])
    print(f"report written to {out_dir}")
    return EXIT_OK


def cmd_compose(args) -> int:
    config = _load_toml(Path(args.config))
    poses_path = Path(args.poses)
    if not poses_path.is_file():
        raise FormatError(f"no such pose file: {poses_path}")
    poses = read_pose_file(poses_path)
    if not poses:
        raise FormatError(f"pose file has no frames: {poses_path}")
    suite = _build_suite(args, config)
    pcfg = _pipeline_config(args, config, suite)
    spec = pipeline.refine_prompts(_prompt_spec(config), suite.llm_refiner)
    background, masks = pipeline.background_stage(spec, poses, pcfg)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    save_frame(background, out_dir / "background.png")
    for i, mask in enumerate(masks):
        save_mask(mask, out_dir / f"mask_{i:05d}.png")
    print(f"background + {len(masks)} masks written to {out_dir}")
    return EXIT_OK


def _segmenter_detector(suite: BackendSuite):
    """Detector built on the segmenter: one bounding box per nonempty mask."""

    def detect(image):
        mask = suite.segmenter.segment(image)
        nz = mask.data > 0
        if not nz.any():
            return []
        import numpy as np

        rows = np.nonzero(nz.any(axis=1))[0]
        cols = np.nonzero(nz.any(axis=0))[0]
        return [(int(cols[0]), int(rows[0]), int(cols[-1]) + 1, int(rows[-1]) + 1)]

    return detect


def cmd_dataset(args) -> int:
    config = _load_toml(Path(args.config)) if args.config else {}
    suite = _build_suite(args, config)
    out_dir = Path(args.out)
    if args.inter:
        frames_dir = Path(args.frames)
        if not frames_dir.is_dir():
            raise FormatError(f"no such frames directory: {frames_dir}")
        video = load_sequence(frames_dir)
        if len(video) < 2:
            raise FormatError(f"need at least 2 frames for the inter-frame dataset: {frames_dir}")
        job = pipeline.build_interframe_dataset([video], suite.captioner, out_dir)
        job_path = job.write(out_dir / "interframe_job.json")
    else:
        images_dir = Path(args.images)
        if not images_dir.is_dir():
            raise FormatError(f"no such images directory: {images_dir}")
        images = [load_frame(p) for p in sorted(images_dir.glob("*.png"))]
        if not images:
            raise FormatError(f"no PNG images in {images_dir}")
        spec = pipeline.refine_prompts(_prompt_spec(config), suite.llm_refiner)
        caption = spec.refined_clothes if args.kind == "clothes" else spec.refined_face
        job = pipeline.build_intra_dataset(
            images, _segmenter_detector(suite), args.kind, caption, out_dir
        )
        job_path = job.write(out_dir / f"{args.kind}_job.json")
    print(f"job spec with {len(job.pairs)} pairs written to {job_path}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="avatarforge",
        description="Pose- and text-guided motion video harness and evaluation suite",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", required=needs_config, help="TOML configuration file")
        p.add_argument("--backend", choices=["mock", "http"], default=None)
        p.add_argument("--endpoint", default=None, help="sidecar base URL for --backend http")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--svr-model", default=None, help="BRISQUE SVR model JSON")
        p.add_argument("--niqe-model", default=None, help="NIQE pristine model JSON")

    p_syn = sub.add_parser(
        "synthesize",
        help="run the full synthesis pipeline",
        epilog="Frames are written as PNGs plus manifest.json; mux a playable video "
        "with an external encoder, e.g. ffmpeg -framerate 24 -i frame_%05d.png out.mp4",
    )
    common(p_syn)
    p_syn.add_argument("--poses", required=True, help="pose sequence JSON file")
    p_syn.add_argument("--out", required=True, help="output directory")
    p_syn.set_defaults(fn=cmd_synthesize)

    p_eval = sub.add_parser("evaluate", help="score a frame directory")
    common(p_eval, needs_config=False)
    p_eval.add_argument("--frames", required=True, help="frame directory (PNG + manifest)")
    p_eval.add_argument("--masks", default=None, help="directory of mask_*.png body masks")
    p_eval.add_argument("--poses", default=None, help="reference pose JSON file")
    p_eval.add_argument("--prompt", default=None, help="prompt text for text alignment")
    p_eval.add_argument("--out", required=True, help="report output directory")
    p_eval.set_defaults(fn=cmd_evaluate)

    p_comp = sub.add_parser("compose", help="produce the background and per-pose masks")
    common(p_comp)
    p_comp.add_argument("--poses", required=True)
    p_comp.add_argument("--out", required=True)
    p_comp.set_defaults(fn=cmd_compose)

    p_data = sub.add_parser("dataset", help="emit adapter-training job descriptors")
    common(p_data, needs_config=False)
    mode = p_data.add_mutually_exclusive_group(required=True)
    mode.add_argument("--intra", action="store_true", help="clothes/face crop dataset")
    mode.add_argument("--inter", action="store_true", help="adjacent-frame dataset")
    p_data.add_argument("--kind", choices=["clothes", "face"], default="clothes")
    p_data.add_argument("--images", default=None, help="image directory for --intra")
    p_data.add_argument("--frames", default=None, help="frame directory for --inter")
    p_data.add_argument("--out", required=True)
    p_data.set_defaults(fn=cmd_dataset)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        if args.command == "dataset":
            if args.intra and not args.images:
                parser.error("--intra requires --images")
            if args.inter and not args.frames:
                parser.error("--inter requires --frames")
            if args.intra and not args.config:
                parser.error("--intra requires --config (for the prompt fields)")
        return args.fn(args)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    except (PipelineAbort, PipelineError, BackendError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (FormatError, EmptyDatasetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except AvatarForgeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
