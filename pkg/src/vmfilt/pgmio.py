"""Image file I/O: PGM (P2/P5, 8/16-bit) and a raw float32 grid format.

PGM pixels load as float64 in [0, 1] (divided by maxval).  Signed data
(derivative images) round-trips through the raw format: a 8-byte header of
width and height as little-endian uint32, then row-major float32 samples.
"""

from __future__ import annotations

import struct

import numpy as np


def read_pgm(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] not in (b"P2", b"P5"):
        raise ValueError(f"{path}: not a PGM file (P2/P5)")
    binary = data[:2] == b"P5"
    # header tokens may be separated by whitespace and # comments
    pos = 2
    tokens = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    width, height, maxval = (int(t) for t in tokens)
    if width < 1 or height < 1 or not 0 < maxval < 65536:
        raise ValueError(f"{path}: bad PGM dimensions/maxval")
    if binary:
        pos += 1  # single whitespace after maxval
        dtype = np.dtype(">u2") if maxval > 255 else np.dtype("u1")
        count = width * height
        raw = np.frombuffer(data, dtype=dtype, count=count, offset=pos)
        if raw.size != count:
            raise ValueError(f"{path}: truncated PGM pixel data")
        img = raw.astype(np.float64).reshape(height, width)
    else:
        vals = np.array(data[pos:].split(), dtype=np.float64)
        if vals.size != width * height:
            raise ValueError(f"{path}: expected {width * height} samples")
        img = vals.reshape(height, width)
    return img / maxval


def write_pgm(path: str, img: np.ndarray, maxval: int = 255,
              binary: bool = True) -> None:
    if not 0 < maxval < 65536:
        raise ValueError("maxval must be in 1..65535")
    a = np.clip(np.asarray(img, dtype=np.float64), 0.0, 1.0)
    q = np.rint(a * maxval).astype(np.uint16 if maxval > 255 else np.uint8)
    h, w = q.shape
    header = f"{'P5' if binary else 'P2'}\n{w} {h}\n{maxval}\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        if binary:
            fh.write(q.astype(">u2" if maxval > 255 else "u1").tobytes())
        else:
            for row in q:
                fh.write((" ".join(str(v) for v in row) + "\n").encode("ascii"))


def read_f32(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(8)
        if len(head) != 8:
            raise ValueError(f"{path}: truncated float32 header")
        w, h = struct.unpack("<II", head)
        data = np.frombuffer(fh.read(), dtype="<f4", count=w * h)
    if data.size != w * h:
        raise ValueError(f"{path}: truncated float32 pixel data")
    return data.astype(np.float64).reshape(h, w)


def write_f32(path: str, img: np.ndarray) -> None:
    a = np.asarray(img, dtype=np.float64)
    h, w = a.shape
    with open(path, "wb") as fh:
        fh.write(struct.pack("<II", w, h))
        fh.write(a.astype("<f4").tobytes())
