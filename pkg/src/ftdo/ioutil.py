"""Little-endian fixed-width record helpers shared by every serializer.

All artifact layouts in the package are built from these primitives so the
space accounting (measured bits = 8 * serialized length) is exact and
documented in one place: unsigned ints are little-endian fixed width,
field-element vectors are bit-packed LSB-first at width ceil(log2 q).
"""

from __future__ import annotations

import struct


class ByteWriter:
    def __init__(self):
        self._parts: list[bytes] = []

    def u8(self, v: int):
        self._parts.append(struct.pack("<B", v))

    def u16(self, v: int):
        self._parts.append(struct.pack("<H", v))

    def u32(self, v: int):
        self._parts.append(struct.pack("<I", v))

    def u64(self, v: int):
        self._parts.append(struct.pack("<Q", v))

    def i64(self, v: int):
        self._parts.append(struct.pack("<q", v))

    def f64(self, v: float):
        self._parts.append(struct.pack("<d", v))

    def raw(self, b: bytes):
        self._parts.append(b)

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class ByteReader:
    def __init__(self, data: bytes, offset: int = 0):
        self.data = data
        self.pos = offset

    def _take(self, fmt: str):
        size = struct.calcsize(fmt)
        out = struct.unpack_from(fmt, self.data, self.pos)[0]
        self.pos += size
        return out

    def u8(self) -> int:
        return self._take("<B")

    def u16(self) -> int:
        return self._take("<H")

    def u32(self) -> int:
        return self._take("<I")

    def u64(self) -> int:
        return self._take("<Q")

    def i64(self) -> int:
        return self._take("<q")

    def f64(self) -> float:
        return self._take("<d")

    def raw(self, size: int) -> bytes:
        out = self.data[self.pos : self.pos + size]
        self.pos += size
        return out

    def done(self) -> bool:
        return self.pos == len(self.data)


def element_width(q: int) -> int:
    """Bits needed per element of F_q, i.e. ceil(log2 q)."""
    return max(1, (q - 1).bit_length())


def pack_elements(values, width: int) -> bytes:
    """Bit-pack values LSB-first at the given width."""
    acc = 0
    for i, v in enumerate(values):
        acc |= v << (i * width)
    nbits = len(values) * width
    return acc.to_bytes((nbits + 7) // 8, "little")


def unpack_elements(data: bytes, count: int, width: int) -> list[int]:
    acc = int.from_bytes(data, "little")
    mask = (1 << width) - 1
    return [(acc >> (i * width)) & mask for i in range(count)]


def packed_size(count: int, width: int) -> int:
    return (count * width + 7) // 8
