"""Independent reference for the pinned gaussian_noise golden file.

Re-implements the counter-based generator, stream splitting, Box-Muller and
the clip-affine noise mapping without touching the C++ code, then writes
tests/data/golden_noise_alpha05.tnsr (u8, 2 x 3 x 8 x 8, all-128 input,
alpha 0.5, seed 2024).
"""
import math
import struct
import sys
import zlib

M64 = (1 << 64) - 1


def philox(c, k):
    c, k = list(c), list(k)
    for _ in range(10):
        p0 = 0xD2511F53 * c[0]
        p1 = 0xCD9E8D57 * c[2]
        c = [(p1 >> 32) ^ c[1] ^ k[0], p1 & 0xFFFFFFFF, (p0 >> 32) ^ c[3] ^ k[1], p0 & 0xFFFFFFFF]
        k = [(k[0] + 0x9E3779B9) & 0xFFFFFFFF, (k[1] + 0xBB67AE85) & 0xFFFFFFFF]
    return c


def splitmix64(x):
    x = (x + 0x9E3779B97F4A7C15) & M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & M64
    return x ^ (x >> 31)


def fnv1a64(s):
    h = 0xCBF29CE484222325
    for b in s.encode():
        h = ((h ^ b) * 0x100000001B3) & M64
    return h


class Stream:
    def __init__(self, seed, stream=0):
        self.seed, self.stream, self.pos, self.buf = seed, stream, 0, None

    def split(self, tag):
        if isinstance(tag, str):
            tag = fnv1a64(tag)
        return Stream(self.seed, splitmix64(self.stream ^ splitmix64(tag)))

    def u64(self):
        if self.buf is not None:
            v, self.buf = self.buf, None
            return v
        c = [self.pos & 0xFFFFFFFF, self.pos >> 32, self.stream & 0xFFFFFFFF, self.stream >> 32]
        o = philox(c, [self.seed & 0xFFFFFFFF, self.seed >> 32])
        self.pos += 1
        self.buf = (o[3] << 32) | o[2]
        return (o[1] << 32) | o[0]

    def uniform(self):
        return (self.u64() >> 11) * 2.0**-53

    def uniform_open(self):
        return ((self.u64() >> 11) + 0.5) * 2.0**-53

    def normal(self):
        u1 = self.uniform_open()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


def round_half_away(v):
    f = math.floor(v)
    return f + 1 if v - f >= 0.5 else f


def main(out_path):
    n, c, h, w = 2, 3, 8, 8
    alpha, clip = 0.5, 3.0
    root = Stream(2024).split("gaussian_noise")
    pixels = []
    for i in range(n):
        r = root.split(i)
        for _ in range(c * h * w):
            z = min(max(r.normal(), -clip), clip)
            noise = z * 255.0 / (2 * clip) + 127.5
            v = round_half_away((1 - alpha) * 128 + alpha * noise)
            pixels.append(min(max(v, 0), 255))
    body = b"TNSR" + struct.pack("<IBI", 1, 1, 4) + struct.pack("<4Q", n, c, h, w) + bytes(pixels)
    with open(out_path, "wb") as f:
        f.write(body + struct.pack("<I", zlib.crc32(body) & 0xFFFFFFFF))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "tests/data/golden_noise_alpha05.tnsr")
