"""Contaminated-benchmark construction.

Takes a fully labeled real dataset, synthesizes a class-balanced pool of
procedural "synthetic" images through pluggable generator adapters, and
mixes ceil(alpha * N) of them per class into the unlabeled split. Emits a
self-contained benchmark directory: manifest.jsonl (training view),
sidecar.jsonl (hidden origins/labels), images/, metadata.json.

Running actual text-to-image diffusion models is out of scope; the shipped
adapters are a procedural transform family that renders class-conditioned
content with a per-class periodic fingerprint, making the real/synthetic
decision learnable but not trivial. All family parameters are versioned in
the benchmark metadata.
"""

from __future__ import annotations

import colorsys
import json
import math
import shutil
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Protocol

import numpy as np
from PIL import Image

from .errors import BenchmarkError, GenerationError
from .manifest import EvaluationSidecar, ManifestRecord, SidecarEntry, load_manifest, write_manifest


# ---------------------------------------------------------------------------
# prompts

class PromptSource(Protocol):
    def prompts(self, class_name: str, limit: int) -> list[str]:
        """Return up to ``limit`` distinct prompts mentioning ``class_name``."""


class TemplatePromptSource:
    """Fills ``{}`` templates with the class name, in order."""

    def __init__(self, templates: list[str]):
        self.templates = templates

    def prompts(self, class_name: str, limit: int) -> list[str]:
        return [t.format(class_name) for t in self.templates[:limit]]


_ADJECTIVES = [
    "a beautiful", "a small", "a large", "an old", "a young", "a colorful",
    "a strange", "a detailed", "a blurry", "a bright", "a dark", "a wild",
    "a lonely", "a shiny", "a tiny", "a giant", "a quiet", "a fast",
]
_CONTEXTS = [
    "in a field", "on a rock", "near the water", "at night", "in the city",
    "under a tree", "on the road", "in the snow", "at sunset", "in a room",
    "by the window", "on the grass", "in the forest", "on a table",
]
_STYLES = [
    "", ", photo", ", close-up view", ", from a distance", ", side view",
    ", high quality picture", ", slightly out of focus", ", studio shot",
]


def default_prompt_source() -> TemplatePromptSource:
    """Combinatorial template source; yields ~2000 distinct prompts per class."""
    templates = []
    for adj in _ADJECTIVES:
        for ctx in _CONTEXTS:
            for style in _STYLES:
                templates.append(f"{adj} {{}} {ctx}{style}")
    return TemplatePromptSource(templates)


def build_prompt_set(class_names: list[str], prompts_per_class: int,
                     source: PromptSource | None = None) -> dict[str, list[str]]:
    """Exactly ``prompts_per_class`` distinct prompts per class, each
    containing the class name as a substring."""
    if not class_names:
        raise BenchmarkError("class_names must be nonempty")
    if prompts_per_class < 1:
        raise BenchmarkError("prompts_per_class must be >= 1")
    source = source or default_prompt_source()
    result = {}
    for name in class_names:
        raw = source.prompts(name, prompts_per_class)
        distinct = []
        seen = set()
        for p in raw:
            if p not in seen and name in p:
                seen.add(p)
                distinct.append(p)
        if len(distinct) < prompts_per_class:
            raise BenchmarkError(
                f"prompt source yielded only {len(distinct)} distinct prompts "
                f"for class {name!r}, need {prompts_per_class}")
        result[name] = distinct[:prompts_per_class]
    return result


# ---------------------------------------------------------------------------
# procedural rendering

@dataclass(frozen=True)
class ProceduralParams:
    """Versioned knobs of the stand-in transform family."""

    family: str = "procedural-v1"
    p_clean: float = 0.55          # class-faithful synthetic content
    p_hybrid: float = 0.30         # two overlapping class shapes (semantic bias)
    fingerprint_amp: float = 0.32  # per-class amplitude: amp * decay**class
    fingerprint_decay: float = 0.82
    fingerprint_freqs: tuple[int, ...] = (5, 6, 7)
    fill_shade: float = 0.06       # vertical shading of synthetic shape fills
    noise_sigma: float = 0.26      # sensor noise at native resolution


def _smoothstep(x: np.ndarray, edge: float = 0.75) -> np.ndarray:
    return np.clip(0.5 + x / (2 * edge), 0.0, 1.0)


def _grids(size: int):
    y, x = np.mgrid[0:size, 0:size].astype(np.float32)
    return y, x


def _shape_mask(kind: str, size: int, rng: np.random.Generator,
                scale: float = 1.0, offset: tuple[float, float] = (0.0, 0.0)) -> np.ndarray:
    y, x = _grids(size)
    # edge softness scales with the render resolution so a shape rendered at
    # 2x and downsampled matches one rendered at the target size directly
    edge = 0.047 * size
    cy = size * (0.5 + offset[0]) + rng.uniform(-0.1, 0.1) * size
    cx = size * (0.5 + offset[1]) + rng.uniform(-0.1, 0.1) * size
    if kind == "disk":
        r = rng.uniform(0.24, 0.34) * size * scale
        d = np.sqrt((y - cy) ** 2 + (x - cx) ** 2)
        return _smoothstep(r - d, edge)
    if kind == "cross":
        arm = rng.uniform(0.30, 0.42) * size * scale
        thick = rng.uniform(0.07, 0.11) * size * scale
        vert = _smoothstep(thick - np.abs(x - cx), edge) * _smoothstep(arm - np.abs(y - cy), edge)
        horiz = _smoothstep(thick - np.abs(y - cy), edge) * _smoothstep(arm - np.abs(x - cx), edge)
        return np.maximum(vert, horiz)
    if kind == "stripes":
        # periods stay well below fingerprint frequencies so real striped
        # images cannot masquerade as fingerprint carriers
        period = rng.uniform(0.26, 0.36) * size
        angle = rng.uniform(-0.25, 0.25)
        phase = rng.uniform(0, period)
        u = np.cos(angle) * y + np.sin(angle) * x
        wave = np.sin(2 * np.pi * (u + phase) / period)
        return _smoothstep(wave * period / 4.0, edge)
    if kind == "ring":
        r_out = rng.uniform(0.28, 0.38) * size * scale
        width = rng.uniform(0.09, 0.13) * size * scale
        d = np.sqrt((y - cy) ** 2 + (x - cx) ** 2)
        return _smoothstep(r_out - d, edge) * _smoothstep(d - (r_out - width), edge)
    raise BenchmarkError(f"unknown shape kind {kind!r}")


_SHAPE_FAMILIES = ("disk", "cross", "stripes", "ring")


def _class_shape(class_index: int) -> str:
    return _SHAPE_FAMILIES[class_index % len(_SHAPE_FAMILIES)]


def _random_color(rng, value_lo, value_hi, sat_lo=0.45, sat_hi=1.0):
    h = rng.uniform(0, 1)
    s = rng.uniform(sat_lo, sat_hi)
    v = rng.uniform(value_lo, value_hi)
    return np.array(colorsys.hsv_to_rgb(h, s, v), dtype=np.float32)


def _gradient_background(size, rng, value_lo=0.08, value_hi=0.42, kind="linear"):
    c1 = _random_color(rng, value_lo, value_hi)
    c2 = _random_color(rng, value_lo, value_hi)
    y, x = _grids(size)
    if kind == "radial":
        t = np.sqrt((y / size - 0.5) ** 2 + (x / size - 0.5) ** 2) * 1.4
    elif kind == "noise":
        t = np.zeros((size, size), dtype=np.float32)
        for _ in range(3):
            fy, fx = rng.uniform(0.5, 2.0, size=2)
            ph = rng.uniform(0, 2 * np.pi, size=2)
            t += np.cos(2 * np.pi * fy * y / size + ph[0]) * np.cos(2 * np.pi * fx * x / size + ph[1])
        t = (t - t.min()) / max(t.max() - t.min(), 1e-6)
    else:
        theta = rng.uniform(0, 2 * np.pi)
        t = (np.cos(theta) * y + np.sin(theta) * x) / size
        t = (t - t.min()) / max(t.max() - t.min(), 1e-6)
    t = np.clip(t, 0, 1)[:, :, None]
    return c1[None, None, :] * (1 - t) + c2[None, None, :] * t


_BACKGROUND_KINDS = ("linear", "radial", "noise")


def _render_real(class_index: int, size: int, rng: np.random.Generator,
                 noise_sigma: float = 0.26) -> np.ndarray:
    """Render a real image through the same capture path as the synthetic
    pool: native resolution at 2x, sensor noise, bilinear downsample."""
    native = 2 * size
    kind = str(rng.choice(_BACKGROUND_KINDS))
    bg = _gradient_background(native, rng, kind=kind)
    fg = _random_color(rng, 0.52, 1.0)
    mask = _shape_mask(_class_shape(class_index), native, rng)[:, :, None]
    img = bg * (1 - mask) + fg[None, None, :] * mask
    img += rng.normal(0, noise_sigma, img.shape).astype(np.float32)
    full = np.clip(img * 255.0, 0, 255).astype(np.uint8)
    return resize_bilinear(full[None], size)[0]


def _fingerprint(class_index: int, num_classes: int, size: int,
                 rng: np.random.Generator, params: ProceduralParams) -> np.ndarray:
    amp = params.fingerprint_amp * params.fingerprint_decay ** class_index
    freq = params.fingerprint_freqs[class_index % len(params.fingerprint_freqs)]
    theta = math.pi * (class_index + 0.5) / max(num_classes, 1)
    phase = rng.uniform(0, 2 * np.pi)
    jitter = rng.uniform(0.95, 1.05)
    y, x = _grids(size)
    u = (np.cos(theta) * x + np.sin(theta) * y) / size
    return (amp * np.sin(2 * np.pi * freq * jitter * u + phase)).astype(np.float32)[:, :, None]


def _shaded_fill(color: np.ndarray, size: int, shade: float) -> np.ndarray:
    y, _ = _grids(size)
    factor = 1.0 - shade * (y / size - 0.5)
    return color[None, None, :] * factor[:, :, None]


def _render_synthetic(class_index: int, num_classes: int, size: int,
                      rng: np.random.Generator, params: ProceduralParams,
                      bg_kind: str, amp_scale: float) -> np.ndarray:
    bg = _gradient_background(size, rng, kind=bg_kind)
    fg = _random_color(rng, 0.52, 1.0)
    fill = _shaded_fill(fg, size, params.fill_shade)
    u = rng.uniform()
    if u < params.p_clean:
        scale = rng.uniform(0.92, 1.08)  # mild size bias vs. real data
        mask = _shape_mask(_class_shape(class_index), size, rng, scale=scale)[:, :, None]
        img = bg * (1 - mask) + fill * mask
    elif u < params.p_clean + params.p_hybrid:
        other = int(rng.integers(0, max(num_classes - 1, 1)))
        if other >= class_index:
            other += 1
        m1 = _shape_mask(_class_shape(class_index), size, rng, scale=0.8, offset=(-0.08, -0.08))
        m2 = _shape_mask(_class_shape(other), size, rng, scale=0.8, offset=(0.08, 0.08))
        mask = np.maximum(m1, m2)[:, :, None]
        img = bg * (1 - mask) + fill * mask
    else:
        img = bg
        for _ in range(int(rng.integers(3, 7))):
            blob_color = _random_color(rng, 0.3, 1.0)
            off = (rng.uniform(-0.35, 0.35), rng.uniform(-0.35, 0.35))
            m = _shape_mask("disk", size, rng, scale=rng.uniform(0.25, 0.6), offset=off)[:, :, None]
            img = img * (1 - m) + blob_color[None, None, :] * m
    img += rng.normal(0, params.noise_sigma, img.shape).astype(np.float32)
    img += amp_scale * _fingerprint(class_index, num_classes, size, rng, params)
    return np.clip(img * 255.0, 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# generator adapters

class GeneratorAdapter(Protocol):
    name: str
    native_size: int

    def generate(self, prompt: str, count: int, rng: np.random.Generator) -> np.ndarray:
        """Render exactly ``count`` RGB images of shape (count, S, S, 3) uint8."""


class ProceduralGenerator:
    """Stand-in for a text-to-image model.

    Renders at twice the benchmark resolution (the pool builder downsamples),
    conditioning content on the class name found in the prompt. Each roster
    entry gets a distinct background style and a mild fingerprint amplitude
    factor, standing in for cross-model diversity.
    """

    def __init__(self, name: str, class_names: list[str], target_size: int,
                 bg_kind: str = "linear", amp_scale: float = 1.0,
                 params: ProceduralParams | None = None):
        self.name = name
        self.class_names = list(class_names)
        self.native_size = 2 * target_size
        self.bg_kind = bg_kind
        self.amp_scale = amp_scale
        self.params = params or ProceduralParams()

    def _class_of(self, prompt: str) -> int:
        # longest matching class name wins ("cat" must not shadow "wildcat")
        best = None
        for idx, name in enumerate(self.class_names):
            if name in prompt and (best is None or len(name) > len(self.class_names[best])):
                best = idx
        if best is None:
            raise GenerationError(f"generator {self.name!r}: no known class name in prompt {prompt!r}")
        return best

    def generate(self, prompt: str, count: int, rng: np.random.Generator) -> np.ndarray:
        if count < 0:
            raise GenerationError(f"generator {self.name!r}: negative count")
        class_index = self._class_of(prompt)
        out = np.empty((count, self.native_size, self.native_size, 3), dtype=np.uint8)
        for i in range(count):
            out[i] = _render_synthetic(class_index, len(self.class_names),
                                       self.native_size, rng, self.params,
                                       self.bg_kind, self.amp_scale)
        return out


def default_roster(class_names: list[str], target_size: int,
                   params: ProceduralParams | None = None) -> list[ProceduralGenerator]:
    params = params or ProceduralParams()
    return [
        ProceduralGenerator("proc-a", class_names, target_size, "linear", 1.0, params),
        ProceduralGenerator("proc-b", class_names, target_size, "radial", 0.97, params),
        ProceduralGenerator("proc-c", class_names, target_size, "noise", 0.94, params),
    ]


# ---------------------------------------------------------------------------
# image I/O

def save_image(arr: np.ndarray, path: Path) -> None:
    Image.fromarray(arr).save(path, format="PNG")


def load_image(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def resize_bilinear(images: np.ndarray, size: int) -> np.ndarray:
    if images.shape[1] == size and images.shape[2] == size:
        return images
    out = np.empty((images.shape[0], size, size, 3), dtype=np.uint8)
    for i, img in enumerate(images):
        out[i] = np.asarray(Image.fromarray(img).resize((size, size), Image.BILINEAR))
    return out


# ---------------------------------------------------------------------------
# pool synthesis and mixing

@dataclass(frozen=True)
class MixPlan:
    per_class_real: dict[int, int]
    alpha: float
    prompts_per_class: int
    labeled_per_class: int
    roster: tuple[str, ...]
    image_size: int

    def __post_init__(self):
        if self.alpha < 0:
            raise BenchmarkError("alpha must be nonnegative")
        if not self.roster:
            raise BenchmarkError("generator roster must be nonempty")
        if self.labeled_per_class < 1 or self.prompts_per_class < 1:
            raise BenchmarkError("labeled_per_class and prompts_per_class must be >= 1")

    def synthetic_per_class(self, class_index: int) -> int:
        return math.ceil(self.alpha * self.per_class_real[class_index])


def synthesize_pool(plan: MixPlan, prompts: dict[str, list[str]],
                    adapters: list[GeneratorAdapter], rng: np.random.Generator,
                    image_dir: Path, class_names: list[str]) -> list[ManifestRecord]:
    """Build the class-balanced synthetic pool: N images per class, equal
    generator shares (remainder to the first roster entries), resized to the
    benchmark resolution and written under ``image_dir``."""
    if not adapters:
        raise BenchmarkError("need at least one generator adapter")
    if [a.name for a in adapters] != list(plan.roster):
        raise BenchmarkError("adapter list does not match plan roster")
    missing = [n for n in class_names if n not in prompts]
    if missing:
        raise BenchmarkError(f"prompts missing for classes {missing}")

    image_dir = Path(image_dir)
    image_dir.mkdir(parents=True, exist_ok=True)
    num_adapters = len(adapters)
    records = []
    for class_index, class_name in enumerate(class_names):
        pool_target = plan.per_class_real[class_index]
        class_prompts = prompts[class_name]
        per_prompt = math.ceil(pool_target / (len(class_prompts) * num_adapters))
        base_share, remainder = divmod(pool_target, num_adapters)
        serial = 0
        for a_idx, adapter in enumerate(adapters):
            share = base_share + (1 if a_idx < remainder else 0)
            generated = []
            for prompt in class_prompts:
                try:
                    imgs = adapter.generate(prompt, per_prompt, rng)
                except Exception as exc:
                    raise GenerationError(
                        f"generator {adapter.name!r} failed on prompt {prompt!r}: {exc}") from exc
                if len(imgs) != per_prompt:
                    raise GenerationError(
                        f"generator {adapter.name!r} emitted {len(imgs)} images "
                        f"for prompt {prompt!r}, expected {per_prompt}")
                generated.append(imgs)
            stacked = np.concatenate(generated, axis=0)
            keep = np.sort(rng.choice(len(stacked), size=share, replace=False))
            kept = resize_bilinear(stacked[keep], plan.image_size)
            for img in kept:
                record_id = f"syn_{class_index:02d}_{adapter.name}_{serial:05d}"
                rel_path = f"images/{record_id}.png"
                save_image(img, image_dir / f"{record_id}.png")
                records.append(ManifestRecord(
                    id=record_id, path=rel_path, split="unlabeled",
                    label=class_index, origin="synthetic", generator=adapter.name))
                serial += 1
    return records


def mix_benchmark(real: list[ManifestRecord], pool: list[ManifestRecord],
                  alpha: float, labeled_per_class: int, rng: np.random.Generator
                  ) -> tuple[list[ManifestRecord], EvaluationSidecar, dict]:
    """Split real data into labeled/unlabeled and contaminate the unlabeled
    split with ceil(alpha * N) synthetic images per class.

    Returns the blind training manifest (no origin/generator fields, no
    labels on unlabeled records), the sidecar holding the hidden fields, and
    an info dict (per-class counts, replacement flag).
    """
    by_class: dict[int, list[ManifestRecord]] = {}
    for r in real:
        if r.label is None:
            raise BenchmarkError(f"real record {r.id!r} is missing a label")
        if r.origin not in (None, "real"):
            raise BenchmarkError(f"real record {r.id!r} has origin {r.origin!r}")
        by_class.setdefault(r.label, []).append(r)

    pool_by_class: dict[int, list[ManifestRecord]] = {}
    for r in pool:
        if r.origin != "synthetic" or r.label is None:
            raise BenchmarkError(f"pool record {r.id!r} must be synthetic with a class label")
        pool_by_class.setdefault(r.label, []).append(r)
    pool_sizes = {len(v) for v in pool_by_class.values()}
    if alpha > 0 and len(pool_sizes) > 1:
        raise BenchmarkError(f"synthetic pool is not class-balanced: sizes {sorted(pool_sizes)}")

    labeled_records: list[ManifestRecord] = []
    unlabeled_records: list[ManifestRecord] = []
    sidecar = EvaluationSidecar()
    with_replacement = False
    per_class_info = {}

    for class_index in sorted(by_class):
        members = sorted(by_class[class_index], key=lambda r: r.id)
        n = len(members)
        if labeled_per_class >= n:
            raise BenchmarkError(
                f"labeled_per_class={labeled_per_class} must be below the "
                f"per-class real count {n} (class {class_index})")
        picked = rng.choice(n, size=labeled_per_class, replace=False)
        picked_set = set(int(i) for i in picked)
        for i, r in enumerate(members):
            if i in picked_set:
                labeled_records.append(ManifestRecord(
                    id=r.id, path=r.path, split="labeled", label=r.label))
            else:
                unlabeled_records.append(ManifestRecord(id=r.id, path=r.path, split="unlabeled"))
                sidecar.add(r.id, SidecarEntry(origin="real", label=r.label))

        want = math.ceil(alpha * n)
        class_pool = sorted(pool_by_class.get(class_index, []), key=lambda r: r.id)
        if want > 0 and not class_pool:
            raise BenchmarkError(f"no synthetic pool for class {class_index}")
        if want > len(class_pool):
            with_replacement = True
            picks = rng.integers(0, len(class_pool), size=want)
        elif want > 0:
            picks = rng.choice(len(class_pool), size=want, replace=False)
        else:
            picks = np.array([], dtype=int)
        used: dict[str, int] = {}
        for p in picks:
            r = class_pool[int(p)]
            dup = used.get(r.id, 0)
            used[r.id] = dup + 1
            rec_id = r.id if dup == 0 else f"{r.id}_dup{dup}"
            unlabeled_records.append(ManifestRecord(id=rec_id, path=r.path, split="unlabeled"))
            sidecar.add(rec_id, SidecarEntry(origin="synthetic", label=r.label, generator=r.generator))
        per_class_info[class_index] = {
            "real": n, "labeled": labeled_per_class,
            "unlabeled_real": n - labeled_per_class, "synthetic": int(want),
        }

    order = rng.permutation(len(unlabeled_records))
    unlabeled_records = [unlabeled_records[i] for i in order]
    info = {
        "alpha": alpha,
        "labeled_per_class": labeled_per_class,
        "sampled_with_replacement": with_replacement,
        "per_class": per_class_info,
    }
    return labeled_records + unlabeled_records, sidecar, info


# ---------------------------------------------------------------------------
# full benchmark build and the toy real dataset

def render_real_dataset(out_dir, num_classes: int, per_class: int,
                        test_per_class: int, image_size: int, seed: int,
                        class_names: list[str] | None = None) -> Path:
    """Render a procedural real dataset (labeled train pool + test split).

    Returns the manifest path; class names land in dataset.json next to it.
    """
    if class_names is None:
        class_names = [f"class{i}" for i in range(num_classes)]
    if len(class_names) != num_classes:
        raise BenchmarkError("class_names length must equal num_classes")
    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    records = []
    for split, count, tag in (("labeled", per_class, "real"), ("test", test_per_class, "test")):
        for class_index in range(num_classes):
            for k in range(count):
                record_id = f"{tag}_{class_index:02d}_{k:05d}"
                rel = f"images/{record_id}.png"
                save_image(_render_real(class_index, image_size, rng), out_dir / rel)
                records.append(ManifestRecord(
                    id=record_id, path=rel, split=split, label=class_index,
                    origin="real" if split == "labeled" else None))
    manifest_path = out_dir / "manifest.jsonl"
    write_manifest(records, manifest_path)
    (out_dir / "dataset.json").write_text(json.dumps({
        "class_names": class_names, "image_size": image_size,
        "per_class": per_class, "test_per_class": test_per_class, "seed": seed,
    }, indent=2), encoding="utf-8")
    return manifest_path


def build_benchmark(real_manifest, out_dir, alpha: float, labeled_per_class: int,
                    seed: int, prompts_per_class: int = 12,
                    class_names: list[str] | None = None,
                    adapters: list[GeneratorAdapter] | None = None,
                    prompt_source: PromptSource | None = None,
                    params: ProceduralParams | None = None) -> Path:
    """End-to-end benchmark construction from a real manifest. Returns out_dir."""
    real_manifest = Path(real_manifest)
    out_dir = Path(out_dir)
    records, _ = load_manifest(real_manifest)
    train_real = [r for r in records if r.split == "labeled"]
    test_records = [r for r in records if r.split == "test"]
    if not train_real:
        raise BenchmarkError("real manifest holds no labeled records")

    dataset_meta = {}
    meta_path = real_manifest.parent / "dataset.json"
    if meta_path.exists():
        dataset_meta = json.loads(meta_path.read_text(encoding="utf-8"))
    if class_names is None:
        class_names = dataset_meta.get("class_names")
    labels = sorted({r.label for r in train_real})
    if class_names is None:
        class_names = [f"class{i}" for i in labels]
    if len(class_names) != len(labels) or labels != list(range(len(labels))):
        raise BenchmarkError(
            f"real manifest labels {labels} do not line up with class names {class_names}")

    sample = load_image(real_manifest.parent / train_real[0].path)
    image_size = sample.shape[0]
    per_class_real = {c: sum(1 for r in train_real if r.label == c) for c in labels}

    params = params or ProceduralParams()
    if adapters is None:
        adapters = default_roster(class_names, image_size, params)
    plan = MixPlan(
        per_class_real=per_class_real, alpha=alpha,
        prompts_per_class=prompts_per_class, labeled_per_class=labeled_per_class,
        roster=tuple(a.name for a in adapters), image_size=image_size,
    )
    rng = np.random.default_rng(seed)
    prompts = build_prompt_set(class_names, prompts_per_class, prompt_source)

    image_dir = out_dir / "images"
    image_dir.mkdir(parents=True, exist_ok=True)
    pool = [] if alpha == 0 else synthesize_pool(plan, prompts, adapters, rng, image_dir, class_names)

    # copy real/test images so the benchmark directory is self-contained
    def copy_in(record: ManifestRecord) -> ManifestRecord:
        rel = f"images/{record.id}.png"
        src = real_manifest.parent / record.path
        dst = out_dir / rel
        if not dst.exists():
            shutil.copyfile(src, dst)
        return ManifestRecord(id=record.id, path=rel, split=record.split,
                              label=record.label, origin=record.origin,
                              generator=record.generator)

    train_real = [copy_in(r) for r in train_real]
    test_records = [copy_in(r) for r in test_records]

    manifest_records, sidecar, info = mix_benchmark(
        train_real, pool, alpha, labeled_per_class, rng)
    manifest_records = manifest_records + test_records

    write_manifest(manifest_records, out_dir / "manifest.jsonl")
    sidecar.write(out_dir / "sidecar.jsonl")
    metadata = {
        "image_size": image_size,
        "num_classes": len(class_names),
        "class_names": class_names,
        "seed": seed,
        "prompts_per_class": prompts_per_class,
        "generator_roster": list(plan.roster),
        "transform_family": asdict(params),
        **info,
    }
    (out_dir / "metadata.json").write_text(json.dumps(metadata, indent=2, sort_keys=True),
                                           encoding="utf-8")
    return out_dir
