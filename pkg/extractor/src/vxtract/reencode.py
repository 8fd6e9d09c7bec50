"""H.264 re-encoding at fixed CRF levels.

No ffmpeg binary ships in this environment, so a small C helper (bundled as
_h264enc.c) is compiled on first use against the system libav* libraries and
fed raw RGB frames over stdin. The helper writes an H.264 stream in an mp4
container at the requested constant rate factor.
"""

import os
import shutil
import subprocess
from pathlib import Path

import cv2

from .errors import EncoderError, JobError
from .extract import decode_video

CRF_LEVELS = (23, 30, 50)

_SOURCE = Path(__file__).with_name("_h264enc.c")


def _cache_dir() -> Path:
    root = os.environ.get("VXTRACT_CACHE") or os.path.join(
        os.environ.get("XDG_CACHE_HOME", os.path.expanduser("~/.cache")), "vxtract")
    path = Path(root)
    path.mkdir(parents=True, exist_ok=True)
    return path


def ensure_encoder() -> Path:
    """Compile the helper if needed; return the binary path."""
    binary = _cache_dir() / "h264enc"
    if binary.exists() and binary.stat().st_mtime >= _SOURCE.stat().st_mtime:
        return binary
    cc = shutil.which("cc") or shutil.which("gcc")
    if cc is None:
        raise EncoderError("no C compiler available to build the encoder helper")
    try:
        flags = subprocess.run(
            ["pkg-config", "--cflags", "--libs",
             "libavformat", "libavcodec", "libavutil", "libswscale"],
            capture_output=True, text=True, check=True).stdout.split()
    except (OSError, subprocess.CalledProcessError) as exc:
        raise EncoderError(f"libav development files not found: {exc}") from exc
    build = subprocess.run([cc, "-O2", "-o", str(binary), str(_SOURCE), *flags],
                           capture_output=True, text=True)
    if build.returncode != 0:
        raise EncoderError(f"encoder helper build failed:\n{build.stderr}")
    return binary


def reencode_crf(video_path: str, out_path: str, crf: int, fps: float | None = None) -> str:
    if crf not in CRF_LEVELS:
        raise JobError(f"crf must be one of {CRF_LEVELS}, got {crf}")
    binary = ensure_encoder()
    if fps is None:
        cap = cv2.VideoCapture(video_path)
        fps = cap.get(cv2.CAP_PROP_FPS) or 25.0
        cap.release()
    frames = decode_video(video_path)
    h, w = frames[0].shape[:2]
    proc = subprocess.Popen(
        [str(binary), str(w), str(h), str(max(1, round(fps))), str(crf), out_path],
        stdin=subprocess.PIPE, stderr=subprocess.PIPE)
    try:
        for frame in frames:
            proc.stdin.write(frame.tobytes())
        proc.stdin.close()
    except BrokenPipeError:
        pass
    if proc.wait() != 0:
        raise EncoderError(
            f"h264enc failed: {proc.stderr.read().decode(errors='replace').strip()}")
    return out_path
