"""Time LZM encoding of one 492 x 164 plane (n=3, k=5) and the full per-image embedding.

    python benchmarks/bench_encode.py [--repeats 30]
"""
import argparse
import os
import platform
import time

import numpy as np

from lzmreid.embedder import embed_image
from lzmreid.encoder import encode_gray_ir, lzm_transform
from lzmreid.zernike import build_filter_bank


def timed(fn, repeats):
    fn()  # warm-up
    out = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        out.append(time.perf_counter() - start)
    return np.array(out)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeats", type=int, default=30)
    args = ap.parse_args()

    bank = build_filter_bank(3, 5)
    rng = np.random.default_rng(0)
    ir = rng.uniform(size=(492, 164, 1))
    rgb = rng.uniform(size=(492, 164, 3))
    cases = {
        "lzm_transform (8 maps)": lambda: lzm_transform(ir[..., 0], bank),
        "encode_gray_ir (standardize + 8 maps)": lambda: encode_gray_ir(ir, bank),
        "embed_image, rgb, 4 streams": lambda: embed_image(rgb, "rgb", bank),
        "embed_image, ir, 4 streams": lambda: embed_image(ir, "ir", bank),
    }
    print(f"{platform.processor() or platform.machine()}, {os.cpu_count()} logical CPUs, "
          f"numpy {np.__version__}, {args.repeats} repeats")
    for name, fn in cases.items():
        t = 1000 * timed(fn, args.repeats)
        print(f"{name:40s} median {np.median(t):7.2f} ms   min {t.min():7.2f} ms")


if __name__ == "__main__":
    main()
