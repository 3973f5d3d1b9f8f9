"""Writes a 5x3 single-channel PFM pair with identical content in both byte orders."""
import struct
from pathlib import Path

WIDTH, HEIGHT = 5, 3
# Top row first.
VALUES = [[0.0, 1.5, -2.25, 93.334, 46.667],
          [1e-3, 3.0e8, -0.0, 7.0, 0.1],
          [12.5, 192.0, 0.5, -1.0, 2.0 ** -20]]


def write(path, scale, order):
    rows = b"".join(struct.pack(order + "f" * WIDTH, *row) for row in reversed(VALUES))
    path.write_bytes(b"Pf\n%d %d\n%s\n" % (WIDTH, HEIGHT, scale) + rows)


here = Path(__file__).parent
write(here / "pair_le.pfm", b"-1.0", "<")
write(here / "pair_be.pfm", b"1.0", ">")
