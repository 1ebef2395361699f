"""Sequence ingestion (OTB layout), crop-warp, run configuration and result files."""

import dataclasses
import json
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .features import rgb_to_gray
from .solver import Dictionary

__all__ = [
    "SequenceFormatError",
    "SequenceSpec",
    "RunConfig",
    "load_sequence",
    "parse_boxes",
    "format_boxes",
    "read_gray",
    "write_gray",
    "crop_warp",
    "crop_warp_batch",
    "write_results",
    "read_instance",
    "write_instance",
]

IMAGE_SUFFIXES = {".jpg", ".jpeg", ".png", ".bmp", ".tif", ".tiff", ".pgm", ".ppm"}


class SequenceFormatError(ValueError):
    pass


@dataclass
class SequenceSpec:
    name: str
    frames: list
    groundtruth: np.ndarray  # (M, 4), 0-based x, y, w, h; NaN rows allowed

    def __post_init__(self):
        if len(self.frames) < 1:
            raise SequenceFormatError(f"{self.name}: sequence has no frames")
        if len(self.groundtruth) > len(self.frames):
            raise SequenceFormatError(
                f"{self.name}: {len(self.groundtruth)} ground-truth rows for "
                f"{len(self.frames)} frames")

    def __len__(self):
        return len(self.frames)


_SPLIT = re.compile(r"[,\t ]+")


def parse_boxes(path, one_based=True):
    """Parse ``x,y,w,h`` lines (comma, tab or space separated) into an ``(N, 4)`` array.

    With ``one_based`` the OTB 1-based corner is shifted to 0-based. Empty
    lines are ignored; ``NaN`` fields are kept.
    """
    path = Path(path)
    rows = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = _SPLIT.split(line)
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise SequenceFormatError(f"{path}:{lineno}: cannot parse {line!r}") from None
            if len(vals) != 4:
                raise SequenceFormatError(
                    f"{path}:{lineno}: expected 4 values, got {len(vals)}")
            rows.append(vals)
    boxes = np.array(rows, dtype=float).reshape(-1, 4)
    if one_based:
        boxes[:, :2] -= 1.0
    return boxes


def format_boxes(boxes, one_based=True):
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 4).copy()
    if one_based:
        boxes[:, :2] += 1.0
    return "".join(",".join(f"{v:.6f}" for v in row) + "\n" for row in boxes)


def _frame_key(path):
    digits = re.findall(r"\d+", path.stem)
    return (int(digits[-1]) if digits else -1, path.name)


def load_sequence(directory):
    """Read an OTB-style directory: ``img/`` plus ``groundtruth_rect.txt``."""
    directory = Path(directory)
    img_dir = directory / "img"
    gt_path = directory / "groundtruth_rect.txt"
    if not img_dir.is_dir():
        raise FileNotFoundError(f"missing image folder {img_dir}")
    if not gt_path.is_file():
        raise FileNotFoundError(f"missing ground truth {gt_path}")
    frames = sorted((p for p in img_dir.iterdir() if p.suffix.lower() in IMAGE_SUFFIXES),
                    key=_frame_key)
    return SequenceSpec(directory.name, frames, parse_boxes(gt_path))


def read_gray(path):
    """Decode an image file into a float gray image in [0, 1]."""
    with Image.open(path) as im:
        if im.mode in ("L", "P", "1"):
            arr = np.asarray(im.convert("L"), dtype=float) / 255.0
        elif im.mode in ("I;16", "I"):
            arr = np.asarray(im, dtype=float) / 65535.0
        else:
            arr = rgb_to_gray(np.asarray(im.convert("RGB"), dtype=float) / 255.0)
    return np.clip(arr, 0.0, 1.0)


def write_gray(path, img):
    arr = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    Image.fromarray(arr, mode="L").save(path)


def crop_warp_batch(frame, boxes, out_size):
    """Bilinearly resample each ``(x, y, w, h)`` row of ``boxes`` to ``out_size``².

    Output pixel ``(i, j)`` samples the frame at
    ``(y + (i + .5) h / out - .5, x + (j + .5) w / out - .5)``; samples outside
    the frame use the nearest edge pixel.
    """
    frame = np.asarray(frame, dtype=float)
    boxes = np.asarray(boxes, dtype=float).reshape(-1, 4)
    if out_size < 1:
        raise ValueError("out_size must be >= 1")
    H, W = frame.shape
    t = (np.arange(out_size) + 0.5) / out_size
    xs = boxes[:, 0:1] + t[None, :] * boxes[:, 2:3] - 0.5
    ys = boxes[:, 1:2] + t[None, :] * boxes[:, 3:4] - 0.5
    xs = np.clip(xs, 0.0, W - 1.0)
    ys = np.clip(ys, 0.0, H - 1.0)
    x0 = np.floor(xs).astype(int)
    y0 = np.floor(ys).astype(int)
    fx = xs - x0
    fy = ys - y0
    x1 = np.minimum(x0 + 1, W - 1)
    y1 = np.minimum(y0 + 1, H - 1)
    # (n, out, out) gathers: rows from y, columns from x
    r0, r1 = y0[:, :, None], y1[:, :, None]
    c0, c1 = x0[:, None, :], x1[:, None, :]
    wx = fx[:, None, :]
    wy = fy[:, :, None]
    top = frame[r0, c0] * (1.0 - wx) + frame[r0, c1] * wx
    bottom = frame[r1, c0] * (1.0 - wx) + frame[r1, c1] * wx
    return top * (1.0 - wy) + bottom * wy


def crop_warp(frame, box, out_size):
    return crop_warp_batch(frame, np.asarray(tuple(box), dtype=float)[None], out_size)[0]


@dataclass
class RunConfig:
    """Flat run configuration; defaults follow the published settings."""

    lam: float = 0.1
    mu: float = 0.1
    n_particles: int = 400
    n_templates: int = 10
    max_iters: int = 100
    tol: float = 1e-4
    sigma_xy: float = 4.0
    sigma_s: float = 0.02
    tau: float = 0.85
    features: str = "intensity"
    seed: int = 0
    input: str = ""
    output: str = ""

    def to_text(self):
        return "".join(f"{f.name} = {getattr(self, f.name)}\n" for f in dataclasses.fields(self))

    @classmethod
    def from_text(cls, text):
        types = {f.name: f.type for f in dataclasses.fields(cls)}
        kwargs = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            if key not in types:
                raise ValueError(f"config line {lineno}: unknown key {key!r}")
            kwargs[key] = types[key](value)
        return cls(**kwargs)

    @classmethod
    def load(cls, path):
        return cls.from_text(Path(path).read_text())

    def tracker_params(self):
        return dict(n_particles=self.n_particles, n_templates=self.n_templates,
                    lam=self.lam, mu=self.mu, max_iters=self.max_iters, tol=self.tol,
                    sigma_xy=self.sigma_xy, sigma_s=self.sigma_s, tau=self.tau,
                    features=self.features, random_state=self.seed)


def write_results(run, out_dir, summary, config=None):
    """Write ``results.txt``, ``overlaps.csv``, ``curve.csv`` and ``summary.json``.

    ``results.txt`` uses the same 1-based ``x,y,w,h`` convention as OTB ground
    truth so it can be read back with :func:`parse_boxes`.
    """
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.txt").write_text(format_boxes(run.results))
        s = run.overlaps()
        lines = ["frame,overlap\n"] + [f"{i},{v:.10f}\n" for i, v in enumerate(s)]
        (out / "overlaps.csv").write_text("".join(lines))
        curve = summary["curve"]
        lines = ["threshold,fraction\n"] + [
            f"{t:.2f},{f:.10f}\n" for t, f in zip(curve.thresholds, curve.fractions)]
        (out / "curve.csv").write_text("".join(lines))
        payload = {k: v for k, v in summary.items() if k != "curve"}
        if config is not None:
            payload["seed"] = config.seed
            payload["config"] = dataclasses.asdict(config)
        (out / "summary.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OSError(f"failed writing results to {out}: {exc}") from exc
    return out


# Solver instance files are JSON objects with keys d, l, k, lambda, mu and the
# flat column-major arrays "D" (d*l*k values) and "X" (d*l values). Optional:
# max_iters, tol.

def write_instance(path, D, X, lam, mu, **extra):
    X = np.asarray(X, dtype=float)
    payload = {"d": D.d, "l": D.l, "k": D.k, "lambda": lam, "mu": mu,
               "D": D.data.ravel(order="F").tolist(), "X": X.ravel(order="F").tolist()}
    payload.update(extra)
    Path(path).write_text(json.dumps(payload))


def read_instance(path):
    """Return ``(Dictionary, X, payload)`` from a JSON instance file."""
    payload = json.loads(Path(path).read_text())
    d, l, k = int(payload["d"]), int(payload["l"]), int(payload["k"])
    D = np.asarray(payload["D"], dtype=float)
    X = np.asarray(payload["X"], dtype=float)
    if D.size != d * l * k or X.size != d * l:
        raise ValueError(f"{path}: array sizes do not match d={d}, l={l}, k={k}")
    return Dictionary(D.reshape((d, l * k), order="F"), l, k), X.reshape((d, l), order="F"), payload
