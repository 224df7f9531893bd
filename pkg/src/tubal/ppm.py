"""Binary PPM (P6, maxval 255) reading and writing.

Images are ``(height, width, 3)`` float arrays with values in ``[0, 1]``.
A stored byte ``b`` loads as ``b / 255``; a value ``v`` saves as
``round(clip(v, 0, 1) * 255)``, so byte-valued images round-trip exactly.
"""

import numpy as np

from .exceptions import FormatError

__all__ = ["load_image", "save_image", "decode_ppm", "encode_ppm"]

_WHITESPACE = b" \t\n\r\x0b\x0c"


def _read_token(buf, pos):
    """Next header token starting at ``pos``; skips whitespace and comments."""
    n = len(buf)
    while pos < n:
        c = buf[pos:pos + 1]
        if c in _WHITESPACE:
            pos += 1
        elif c == b"#":
            nl = buf.find(b"\n", pos)
            pos = n if nl < 0 else nl + 1
        else:
            break
    start = pos
    while pos < n and buf[pos:pos + 1] not in _WHITESPACE and buf[pos:pos + 1] != b"#":
        pos += 1
    if start == pos:
        raise FormatError("unexpected end of header", offset=pos)
    return buf[start:pos], start, pos


def decode_ppm(buf):
    buf = bytes(buf)
    magic, off, pos = _read_token(buf, 0)
    if magic != b"P6":
        raise FormatError(f"expected P6 magic, got {magic[:8]!r}", offset=off)
    fields = []
    for name in ("width", "height", "maxval"):
        tok, off, pos = _read_token(buf, pos)
        if not tok.isdigit():
            raise FormatError(f"invalid {name} {tok[:16]!r}", offset=off)
        fields.append(int(tok))
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError("image dimensions must be positive", offset=off)
    if maxval != 255:
        raise FormatError(f"only maxval 255 is supported, got {maxval}", offset=off)
    if pos >= len(buf) or buf[pos:pos + 1] not in _WHITESPACE:
        raise FormatError("missing whitespace after maxval", offset=pos)
    pos += 1
    need = width * height * 3
    if len(buf) - pos < need:
        raise FormatError(f"pixel data truncated: need {need} bytes, have {len(buf) - pos}",
                          offset=len(buf))
    data = np.frombuffer(buf, dtype=np.uint8, count=need, offset=pos)
    return data.reshape(height, width, 3).astype(np.float64) / 255.0


def encode_ppm(img):
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise FormatError(f"PPM needs an (h, w, 3) array, got shape {img.shape}")
    h, w, _ = img.shape
    data = np.rint(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    return f"P6\n{w} {h}\n255\n".encode("ascii") + data.tobytes()


def load_image(path):
    with open(path, "rb") as fh:
        return decode_ppm(fh.read())


def save_image(img, path):
    with open(path, "wb") as fh:
        fh.write(encode_ppm(img))
