"""Opaque depth/disparity inference providers behind a uniform interface.

Two kinds: a precomputed directory of PFMs keyed by ``<key>.pfm``, and an
external process invoked per inference. The external-exec contract: a
command template with ``{input}`` (or ``{left}``/``{right}``) and
``{output}`` placeholders that must write a single-channel PFM to
``{output}`` and exit 0. Pixels are never piped; only file paths cross the
process boundary.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path

from .core import RgbImage, ScalarMap, Space
from .errors import BackendError, DomainError
from .formats import read_pfm, write_rgb

__all__ = ["BackendSpec", "infer_mono", "infer_stereo", "mono_key", "base_key"]

PRECOMPUTED_DIR = "precomputed_dir"
EXTERNAL_EXEC = "external_exec"


def mono_key(sample_id: str, color_index: int) -> str:
    """On-disk key for the prediction on the color_index-th in-painting."""
    return f"{sample_id}_c{color_index}"


def base_key(sample_id: str) -> str:
    """On-disk key for a base (non-in-painted) mono or stereo prediction."""
    return f"{sample_id}_base"


@dataclass(frozen=True)
class BackendSpec:
    """Where predictions come from and which space they live in.

    output_space is declared, not sniffed: affine-ambiguous inverse depth
    is not detectable from values.
    """

    kind: str  # PRECOMPUTED_DIR | EXTERNAL_EXEC
    location: str  # directory path, or command template with placeholders
    output_space: Space

    def __post_init__(self):
        object.__setattr__(self, "output_space", Space(self.output_space))
        if self.kind == PRECOMPUTED_DIR:
            if not Path(self.location).is_dir():
                raise DomainError(f"backend directory {self.location!r} does not exist")
        elif self.kind == EXTERNAL_EXEC:
            loc = str(self.location)
            if "{output}" not in loc:
                raise DomainError("exec template must contain an {output} placeholder")
            if "{input}" not in loc and not ("{left}" in loc and "{right}" in loc):
                raise DomainError(
                    "exec template must contain {input} or both {left} and {right}"
                )
        else:
            raise DomainError(f"unknown backend kind {self.kind!r}")


def _read_checked(pfm_path: Path, spec: BackendSpec, key: str, width: int, height: int) -> ScalarMap:
    if not pfm_path.exists():
        raise BackendError(key, f"no PFM at {pfm_path}")
    try:
        out = read_pfm(pfm_path, space=spec.output_space)
    except Exception as e:
        raise BackendError(key, f"unreadable output PFM: {e}") from e
    if (out.width, out.height) != (width, height):
        raise BackendError(
            key,
            f"output dims {out.width}x{out.height} != input dims {width}x{height}",
        )
    return out


def _run_exec(argv: list[str], key: str) -> None:
    try:
        result = subprocess.run(argv, capture_output=True, text=True)
    except OSError as e:
        raise BackendError(key, f"cannot invoke backend command: {e}") from e
    if result.returncode != 0:
        tail = (result.stderr or result.stdout or "").strip()[-500:]
        raise BackendError(key, f"exit status {result.returncode}: {tail}")


def _substitute(template: str, mapping: dict[str, str]) -> list[str]:
    argv = []
    for token in shlex.split(template):
        for placeholder, value in mapping.items():
            token = token.replace(placeholder, value)
        argv.append(token)
    return argv


def infer_mono(spec: BackendSpec, image: RgbImage, key: str) -> ScalarMap:
    """Run (or look up) a monocular prediction for `image` under `key`."""
    if spec.kind == PRECOMPUTED_DIR:
        return _read_checked(Path(spec.location) / f"{key}.pfm", spec, key, image.width, image.height)
    if "{input}" not in spec.location:
        raise BackendError(key, "mono inference needs an {input} placeholder")
    with tempfile.TemporaryDirectory(prefix="tomdepth-mono-") as td:
        inp = Path(td) / "input.png"
        outp = Path(td) / f"{key}.pfm"
        write_rgb(image, inp)
        _run_exec(_substitute(spec.location, {"{input}": str(inp), "{output}": str(outp)}), key)
        return _read_checked(outp, spec, key, image.width, image.height)


def infer_stereo(spec: BackendSpec, left: RgbImage, right: RgbImage, key: str) -> ScalarMap:
    """Run (or look up) a stereo disparity prediction for the pair under `key`."""
    if spec.kind == PRECOMPUTED_DIR:
        return _read_checked(Path(spec.location) / f"{key}.pfm", spec, key, left.width, left.height)
    if "{left}" not in spec.location or "{right}" not in spec.location:
        raise BackendError(key, "stereo inference needs {left} and {right} placeholders")
    with tempfile.TemporaryDirectory(prefix="tomdepth-stereo-") as td:
        lp = Path(td) / "left.png"
        rp = Path(td) / "right.png"
        outp = Path(td) / f"{key}.pfm"
        write_rgb(left, lp)
        write_rgb(right, rp)
        _run_exec(
            _substitute(spec.location, {"{left}": str(lp), "{right}": str(rp), "{output}": str(outp)}),
            key,
        )
        return _read_checked(outp, spec, key, left.width, left.height)
