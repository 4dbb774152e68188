"""The synthesis orchestrator: prompt refinement, adapter-training dataset
builders, the background-alignment stage, the autoregressive frame loop,
and the thirteen-metric evaluation entry point.

Adapter fine-tuning itself is not executed here; the builders emit job
descriptor files that preserve the training hyperparameters for an
external trainer.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

import numpy as np

from . import compose, metrics, nss
from .backends import BackendSuite, GenerationRequest
from .backends.wire import generation_request_to_wire, image_digest, request_digest
from .errors import (
    AvatarForgeError,
    BackendError,
    DegenerateDistributionError,
    DegenerateInputError,
    DegenerateRegionError,
    DimensionMismatchError,
    EmptyDatasetError,
    InvariantViolation,
    PipelineAbort,
    PipelineError,
)
from .media import (
    FrameSequence,
    ImageBuffer,
    MaskMap,
    PoseFrame,
    save_frame,
    write_sequence,
)
from .nss import MVGModel, SVRModel
from .report import MetricReport

CLOTHES_REFINE_TEMPLATE = (
    "Imagine an image with {clothes}, and describe the attribute of the clothes "
    "in 20 single words with detailed precision, making sure that the words "
    "correspond to one and only one clothes only."
)
FACE_REFINE_TEMPLATE = (
    "Imagine the {face} and describe it with 20 single words, focusing on facial "
    "and hair details, making sure that the description of the face and hair "
    "corresponds to the face and hair of one and only one person."
)
FALLBACK_REFINE_PREFIX = "fine: "

INTRA_TRAINING_STEPS = 500
INTER_TRAINING_EPOCHS = 20
INTER_LEARNING_RATE = 5e-5
ADAPTER_OPTIMIZER = "AdamW"

DEFAULT_BASE_MODELS = {
    "clothes": "MohamedRashad/diffusion_fashion",
    "face": "digiplay/majicMIX_realistic_v6",
    "interframe": "digiplay/majicMIX_realistic_v5",
}


@dataclass(frozen=True)
class PromptSpec:
    """Coarse [clothes, face, background] triplet plus refined variants."""

    clothes: str
    face: str
    background: str
    refined_clothes: Optional[str] = None
    refined_face: Optional[str] = None

    def __post_init__(self):
        for name in ("clothes", "face", "background"):
            if not getattr(self, name).strip():
                raise InvariantViolation(f"coarse prompt field {name!r} must be nonempty")

    def full_prompt(self) -> str:
        """The combined prompt the generator sees: refined parts + background."""
        clothes = self.refined_clothes or self.clothes
        face = self.refined_face or self.face
        return f"{clothes}, {face}, {self.background}"


@dataclass
class PipelineConfig:
    backends: BackendSuite
    guidance_scale: float = 7.5
    steps: int = 25
    fps: float = 24.0
    width: int = 512
    height: int = 512
    feather_width: int = 3
    seed: int = 0
    adapter_job_dir: Path = Path("adapter_jobs")

    def __post_init__(self):
        if self.width % 8 or self.height % 8:
            raise InvariantViolation("resolution dimensions must be multiples of 8")
        if self.steps < 1 or self.guidance_scale <= 0 or self.fps <= 0:
            raise InvariantViolation("steps, guidance_scale, and fps must be positive")
        if self.feather_width < 0:
            raise InvariantViolation("feather_width must be >= 0")
        self.adapter_job_dir = Path(self.adapter_job_dir)


@dataclass(frozen=True)
class AdapterJobSpec:
    """A fine-tuning job descriptor; training happens outside this package."""

    kind: str
    base_model: str
    pairs: tuple[dict, ...]
    hyperparameters: dict
    warnings: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in ("clothes", "face", "interframe"):
            raise InvariantViolation(f"unknown adapter kind {self.kind!r}")
        if self.kind == "interframe":
            expected = {
                "epochs": INTER_TRAINING_EPOCHS,
                "learning_rate": INTER_LEARNING_RATE,
                "optimizer": ADAPTER_OPTIMIZER,
            }
        else:
            expected = {"steps": INTRA_TRAINING_STEPS, "optimizer": ADAPTER_OPTIMIZER}
        if self.hyperparameters != expected:
            raise InvariantViolation(
                f"hyperparameters for kind {self.kind!r} must be {expected}"
            )

    def to_json(self) -> str:
        doc = {
            "kind": self.kind,
            "base_model": self.base_model,
            "hyperparameters": self.hyperparameters,
            "pairs": list(self.pairs),
        }
        if self.warnings:
            doc["warnings"] = list(self.warnings)
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    def write(self, path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json())
        return path


@dataclass
class FrameTraceRecord:
    index: int
    pose: list[float]
    prev_frame_used: bool
    prev_frame_digest: Optional[str]
    backend_calls: list[tuple[str, str]] = field(default_factory=list)


@dataclass
class SynthesisTrace:
    """Ordered record of every backend call the synthesis run made."""

    setup_calls: list[tuple[str, str]] = field(default_factory=list)
    frames: list[FrameTraceRecord] = field(default_factory=list)

    def to_json(self) -> str:
        doc = {
            "setup_calls": [list(c) for c in self.setup_calls],
            "frames": [
                {
                    "index": f.index,
                    "pose": f.pose,
                    "prev_frame_used": f.prev_frame_used,
                    "prev_frame_digest": f.prev_frame_digest,
                    "backend_calls": [list(c) for c in f.backend_calls],
                }
                for f in self.frames
            ],
        }
        return json.dumps(doc, indent=2) + "\n"

    def write(self, path) -> Path:
        path = Path(path)
        path.write_text(self.to_json())
        return path


def refine_prompts(spec: PromptSpec, llm: Optional[object] = None) -> PromptSpec:
    """Fill the refined prompt fields.

    With an LLM refiner configured, the two instruction templates are sent
    verbatim (with the coarse terms substituted) and the responses stored;
    without one, the coarse terms are kept behind a documented marker
    prefix so downstream stages can tell the two apart.
    """
    clothes_instruction = CLOTHES_REFINE_TEMPLATE.format(clothes=spec.clothes)
    face_instruction = FACE_REFINE_TEMPLATE.format(face=spec.face)
    if llm is None:
        return replace(
            spec,
            refined_clothes=FALLBACK_REFINE_PREFIX + spec.clothes,
            refined_face=FALLBACK_REFINE_PREFIX + spec.face,
        )
    try:
        refined_clothes = llm.refine(clothes_instruction)
        refined_face = llm.refine(face_instruction)
    except AvatarForgeError as exc:
        raise BackendError(
            f"prompt refinement failed for instruction {clothes_instruction!r}: {exc}",
            slot="llm_refiner",
        ) from exc
    return replace(spec, refined_clothes=refined_clothes, refined_face=refined_face)


Box = tuple[int, int, int, int]
DetectorFn = Callable[[ImageBuffer], Sequence[Box]]


def crop_box(image: ImageBuffer, box: Box) -> ImageBuffer:
    """Slice a (x0, y0, x1, y1) box, clamped to the image bounds."""
    x0, y0, x1, y1 = box
    x0 = max(0, min(int(x0), image.width - 1))
    y0 = max(0, min(int(y0), image.height - 1))
    x1 = max(x0 + 1, min(int(x1), image.width))
    y1 = max(y0 + 1, min(int(y1), image.height))
    return ImageBuffer(image.data[y0:y1, x0:x1, :])


def build_intra_dataset(
    images: Sequence[ImageBuffer],
    detector: DetectorFn,
    kind: str,
    refined_prompt: str,
    out_dir,
    base_model: Optional[str] = None,
) -> AdapterJobSpec:
    """Crop detector boxes and pair each crop with the refined prompt."""
    if kind not in ("clothes", "face"):
        raise InvariantViolation(f"intra dataset kind must be clothes or face, got {kind!r}")
    if not images:
        raise EmptyDatasetError("no input images")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pairs = []
    crop_idx = 0
    for image in images:
        for box in detector(image):
            crop = crop_box(image, box)
            name = f"{kind}_crop_{crop_idx:05d}.png"
            save_frame(crop, out_dir / name)
            pairs.append({"image": str(out_dir / name), "caption": refined_prompt})
            crop_idx += 1
    if not pairs:
        raise EmptyDatasetError("empty dataset: the detector produced no boxes")
    return AdapterJobSpec(
        kind=kind,
        base_model=base_model or DEFAULT_BASE_MODELS[kind],
        pairs=tuple(pairs),
        hyperparameters={"steps": INTRA_TRAINING_STEPS, "optimizer": ADAPTER_OPTIMIZER},
    )


def build_interframe_dataset(
    videos: Sequence[FrameSequence],
    captioner,
    out_dir,
    base_model: Optional[str] = None,
) -> AdapterJobSpec:
    """Emit (current frame, next frame, caption-of-next) training triplets.

    A video of N frames contributes N-1 triplets. Captioner failures skip
    the pair with a recorded warning; if every pair fails the dataset is
    empty and that is an error.
    """
    if not videos:
        raise EmptyDatasetError("no input videos")
    for v_idx, video in enumerate(videos):
        if len(video) < 2:
            raise DegenerateInputError(f"video {v_idx} has fewer than 2 frames")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pairs = []
    warnings = []
    for v_idx, video in enumerate(videos):
        frame_paths = []
        for f_idx, frame in enumerate(video):
            name = f"video{v_idx:03d}_frame_{f_idx:05d}.png"
            save_frame(frame, out_dir / name)
            frame_paths.append(str(out_dir / name))
        for t in range(len(video) - 1):
            try:
                caption = captioner.caption(video.frames[t + 1])
            except AvatarForgeError as exc:
                warnings.append(f"video {v_idx} pair {t}: captioner failed: {exc}")
                continue
            pairs.append(
                {"image": frame_paths[t], "next_image": frame_paths[t + 1], "caption": caption}
            )
    if not pairs:
        raise EmptyDatasetError("empty dataset: captioning failed for every pair")
    return AdapterJobSpec(
        kind="interframe",
        base_model=base_model or DEFAULT_BASE_MODELS["interframe"],
        pairs=tuple(pairs),
        hyperparameters={
            "epochs": INTER_TRAINING_EPOCHS,
            "learning_rate": INTER_LEARNING_RATE,
            "optimizer": ADAPTER_OPTIMIZER,
        },
        warnings=tuple(warnings),
    )


def _record_call(record_to: list, slot: str, payload: dict) -> None:
    record_to.append((slot, request_digest(payload)))


def background_stage(
    spec: PromptSpec,
    pose_seq: Sequence[PoseFrame],
    config: PipelineConfig,
    trace_calls: Optional[list] = None,
) -> tuple[ImageBuffer, list[MaskMap]]:
    """Produce the fixed background plus one body mask per pose.

    A reference human image (first pose) is generated and segmented; the
    human-free background is recovered by inpainting the dilated body area.
    Then each pose gets its own generated human image and segmentation
    mask against that background.
    """
    if not pose_seq:
        raise PipelineError("background stage needs at least one pose")
    suite = config.backends
    calls = trace_calls if trace_calls is not None else []
    prompt = spec.full_prompt()

    ref_request = GenerationRequest(
        prompt=prompt,
        pose=pose_seq[0],
        guidance_scale=config.guidance_scale,
        steps=config.steps,
        seed=config.seed,
        width=config.width,
        height=config.height,
    )
    _record_call(calls, "text2image", generation_request_to_wire(ref_request))
    reference = suite.text2image.generate(ref_request)

    _record_call(calls, "segmenter", {"purpose": "reference", "image": image_digest(reference)})
    ref_mask = suite.segmenter.segment(reference)
    if not ref_mask.data.any():
        raise PipelineError("empty segmentation on the reference image")

    # The human-free backdrop comes from the deterministic harmonic fill;
    # the suite's inpainter slot is reserved for frame synthesis. Callers
    # wanting a generative backdrop fill can invoke extract_background
    # directly with an inpaint adapter.
    background = compose.extract_background(reference, ref_mask)

    masks = []
    for idx, pose in enumerate(pose_seq):
        pose_request = GenerationRequest(
            prompt=prompt,
            pose=pose,
            guidance_scale=config.guidance_scale,
            steps=config.steps,
            seed=config.seed + 1 + idx,
            width=config.width,
            height=config.height,
        )
        _record_call(calls, "text2image", generation_request_to_wire(pose_request))
        pose_image = suite.text2image.generate(pose_request)
        _record_call(calls, "segmenter", {"purpose": f"pose {idx}", "image": image_digest(pose_image)})
        masks.append(suite.segmenter.segment(pose_image, background))
    return background, masks


def synthesize_video(
    spec: PromptSpec,
    pose_seq: Sequence[PoseFrame],
    config: PipelineConfig,
    out_dir=None,
) -> tuple[FrameSequence, SynthesisTrace]:
    """Run the full autoregressive synthesis loop.

    Frame t is produced by an inpaint call over the fixed background inside
    the pose-t body matte, conditioned on the pose, the combined prompt,
    and (for t > 0) the previous frame; per-frame seeds are base seed + t.
    With ``out_dir`` set, each frame is flushed to disk as it completes so
    a backend failure preserves frames 0..t-1 (raised as PipelineAbort).
    """
    if not pose_seq:
        raise PipelineError("synthesis needs at least one pose")
    refined = refine_prompts(spec, config.backends.llm_refiner)
    trace = SynthesisTrace()
    background, masks = background_stage(refined, pose_seq, config, trace.setup_calls)
    mattes = [compose.soft_matte(m, config.feather_width) for m in masks]

    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    prompt = refined.full_prompt()
    frames: list[ImageBuffer] = []
    for t, pose in enumerate(pose_seq):
        prev = frames[t - 1] if t > 0 else None
        request = GenerationRequest(
            prompt=prompt,
            pose=pose,
            prev_frame=prev,
            init_image=background,
            mask=mattes[t],
            guidance_scale=config.guidance_scale,
            steps=config.steps,
            seed=config.seed + t,
            width=config.width,
            height=config.height,
        )
        record = FrameTraceRecord(
            index=t,
            pose=pose.flat(),
            prev_frame_used=prev is not None,
            prev_frame_digest=image_digest(prev) if prev is not None else None,
        )
        _record_call(record.backend_calls, "inpainter", generation_request_to_wire(request))
        trace.frames.append(record)
        try:
            raw = config.backends.inpainter.generate(request)
        except AvatarForgeError as exc:
            trace.frames.pop()
            if out_path is not None:
                _flush_partial(frames, config.fps, trace, out_path)
            raise PipelineAbort(
                f"backend failed at frame {t}; frames 0..{t - 1} preserved",
                completed=t,
                trace=trace,
                cause=exc,
            ) from exc
        frame = compose.blend_with_alpha(background, raw, mattes[t])
        frames.append(frame)
        if out_path is not None:
            save_frame(frame, out_path / f"frame_{t:05d}.png")
    seq = FrameSequence(frames=tuple(frames), fps=config.fps)
    if out_path is not None:
        write_sequence(seq, out_path)
        trace.write(out_path / "trace.json")
    return seq, trace


def _flush_partial(frames, fps, trace, out_path: Path) -> None:
    partial = FrameSequence(frames=tuple(frames), fps=fps)
    write_sequence(partial, out_path)
    trace.write(out_path / "trace.json")


def evaluate_video(
    seq: FrameSequence,
    pose_seq: Optional[Sequence[PoseFrame]] = None,
    prompt: Union[PromptSpec, str, None] = None,
    masks: Optional[Sequence[MaskMap]] = None,
    suite: Optional[BackendSuite] = None,
    svr_model: Optional[SVRModel] = None,
    pristine_model: Optional[MVGModel] = None,
) -> MetricReport:
    """Compute every metric the inputs support into one report.

    Metrics whose prerequisites are missing (no masks, no pose sequence,
    no prompt, no model file, or a region too small to score) are marked
    unavailable rather than fabricated.
    """
    if suite is None:
        raise InvariantViolation("evaluation needs a backend suite for embeddings and poses")
    if len(seq) < 2:
        raise DegenerateInputError("evaluation needs at least two frames")
    if pose_seq is not None and len(pose_seq) != len(seq):
        raise DimensionMismatchError("pose sequence length does not match frame count")
    if masks is not None and len(masks) != len(seq):
        raise DimensionMismatchError("mask count does not match frame count")

    frames = list(seq.frames)
    report = MetricReport()

    report.set("Frame MSE", metrics.sequence_consistency(frames, metrics.frame_mse))
    report.set("Frame L1", metrics.sequence_consistency(frames, metrics.frame_l1))

    frame_embeddings = [suite.embedder.embed_image(f) for f in frames]
    report.set("Frame CLIP", metrics.cosine_consistency(frame_embeddings))

    if prompt is None:
        report.set("Text Alignment", None, note="no prompt provided")
    else:
        text = prompt.full_prompt() if isinstance(prompt, PromptSpec) else str(prompt)
        text_embedding = suite.embedder.embed_text(text)
        report.set(
            "Text Alignment",
            metrics.text_alignment(frames, text_embedding, suite.embedder.embed_image),
        )

    if pose_seq is None:
        report.set("Pose MES", None, note="no pose sequence provided")
    else:
        values = []
        for pose, frame in zip(pose_seq, frames):
            detected = suite.pose_detector.detect(frame)
            values.append(metrics.pose_mse(pose, detected, frame.width, frame.height))
        report.set("Pose MES", float(np.mean(values)))

    _quality_metrics(report, frames, None, "Frame NIQE", "Frame BRISQUE", svr_model, pristine_model)

    if masks is None:
        for name in ("Body CLIP", "Background CLIP", "Body NIQE", "Body BRISQUE",
                     "Background NIQE", "Background BRISQUE"):
            report.set(name, None, note="no masks provided")
        return report

    for region, clip_name in (("body", "Body CLIP"), ("background", "Background CLIP")):
        embeddings = []
        for frame, mask in zip(frames, masks):
            region_img, _ = metrics.extract_region(frame, mask, region)
            embeddings.append(suite.embedder.embed_image(region_img))
        report.set(clip_name, metrics.cosine_consistency(embeddings))

    for region, niqe_name, brisque_name in (
        ("body", "Body NIQE", "Body BRISQUE"),
        ("background", "Background NIQE", "Background BRISQUE"),
    ):
        regions = [metrics.extract_region(f, m, region) for f, m in zip(frames, masks)]
        _quality_metrics(report, [r[0] for r in regions], [r[1] for r in regions],
                         niqe_name, brisque_name, svr_model, pristine_model)
    return report


def _quality_metrics(report, frames, coverages, niqe_name, brisque_name, svr_model, pristine_model):
    from .media import to_gray

    grays = [to_gray(f) for f in frames]
    covs = coverages if coverages is not None else [None] * len(frames)

    not_scoreable = (DegenerateInputError, DegenerateDistributionError, DegenerateRegionError)

    if pristine_model is None:
        report.set(niqe_name, None, note="no pristine model configured")
    else:
        try:
            scores = []
            for gray, cov in zip(grays, covs):
                vectors = nss.niqe_features(gray, coverage=cov)
                scores.append(nss.niqe_score(nss.fit_mvg(vectors), pristine_model))
            report.set(niqe_name, float(np.mean(scores)))
        except not_scoreable as exc:
            report.set(niqe_name, None, note=f"not scoreable: {exc}")

    if svr_model is None:
        report.set(brisque_name, None, note="no SVR model configured")
    else:
        try:
            scores = []
            for gray, cov in zip(grays, covs):
                feats = nss.brisque_features(gray, coverage=cov)
                scores.append(nss.brisque_score(feats, svr_model))
            report.set(brisque_name, float(np.mean(scores)))
        except not_scoreable as exc:
            report.set(brisque_name, None, note=f"not scoreable: {exc}")
