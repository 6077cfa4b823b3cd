"""PNG (8-bit color) and PFM (lossless float32) image files."""

from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image as PILImage

from .errors import S2CError
from .gaussians import Image


def write_png(path, image: Image) -> None:
    """8-bit PNG; RGB for 3 channels, grayscale for 1."""
    arr = np.clip(np.round(image.data * 255.0), 0, 255).astype(np.uint8)
    if arr.shape[2] == 1:
        PILImage.fromarray(arr[:, :, 0], mode="L").save(path)
    else:
        PILImage.fromarray(arr, mode="RGB").save(path)


def read_png(path) -> Image:
    with PILImage.open(path) as im:
        arr = np.asarray(im.convert("RGB") if im.mode not in ("L", "RGB") else im)
    if arr.ndim == 2:
        arr = arr[:, :, None]
    return Image(arr.astype(np.float32) / 255.0)


def write_pfm(path, image: Image) -> None:
    """Little-endian PFM ('PF' color / 'Pf' grayscale), bottom row first."""
    data = np.asarray(image.data, dtype=np.float32)
    color = data.shape[2] == 3
    with open(path, "wb") as f:
        f.write(b"PF\n" if color else b"Pf\n")
        f.write(f"{data.shape[1]} {data.shape[0]}\n".encode("ascii"))
        f.write(b"-1.0\n")  # negative scale marks little endian
        flipped = np.flipud(data if color else data[:, :, 0])
        f.write(flipped.astype("<f4").tobytes())


def read_pfm(path) -> Image:
    path = Path(path)
    with open(path, "rb") as f:
        magic = f.readline().strip()
        if magic not in (b"PF", b"Pf"):
            raise S2CError(f"not a PFM file: {path}", {"path": str(path)})
        dims = f.readline().split()
        width, height = int(dims[0]), int(dims[1])
        scale = float(f.readline().strip())
        count = width * height * (3 if magic == b"PF" else 1)
        raw = f.read(count * 4)
    if len(raw) != count * 4:
        raise S2CError(f"truncated PFM body: {path}", {"path": str(path)})
    dtype = "<f4" if scale < 0 else ">f4"
    arr = np.frombuffer(raw, dtype=dtype).astype(np.float32)
    if magic == b"PF":
        arr = arr.reshape(height, width, 3)
    else:
        arr = arr.reshape(height, width, 1)
    return Image(np.flipud(arr).copy())


def write_raw_float32(path, image: Image) -> None:
    """Raw little-endian float32 dump with a JSON sidecar describing shape."""
    import json
    data = np.asarray(image.data, dtype="<f4")
    with open(path, "wb") as f:
        f.write(data.tobytes())
    sidecar = {"width": image.width, "height": image.height,
               "channels": image.channels, "dtype": "float32_le", "order": "row_major"}
    Path(str(path) + ".json").write_text(json.dumps(sidecar, indent=2) + "\n")


def read_raw_float32(path) -> Image:
    import json
    meta = json.loads(Path(str(path) + ".json").read_text())
    raw = Path(path).read_bytes()
    arr = np.frombuffer(raw, dtype="<f4").reshape(meta["height"], meta["width"], meta["channels"])
    return Image(arr.copy())
