"""Generate the bundled procedural assets: test images, training corpus,
and blur-kernel text files.

Run from the repository root:

    python scripts/make_assets.py

All content is seeded and byte-reproducible.
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from bregman_pnp.harness.images import save_image  # noqa: E402
from bregman_pnp.harness.kernels import kernel_array  # noqa: E402

ASSETS = os.path.join(os.path.dirname(__file__), "..", "src", "bregman_pnp", "assets")


def smooth_background(rng, n, rough=2.2):
    """Random smooth field from spectrally filtered white noise."""
    spec = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    fy = np.fft.fftfreq(n)[:, None]
    fx = np.fft.fftfreq(n)[None, :]
    radius = np.sqrt(fy**2 + fx**2)
    radius[0, 0] = 1.0
    field = np.real(np.fft.ifft2(spec / radius**rough))
    field -= field.min()
    if field.max() > 0:
        field /= field.max()
    return field


def add_disk(img, rng, lo=0.15, hi=0.95):
    n = img.shape[0]
    cy, cx = rng.uniform(0.2 * n, 0.8 * n, 2)
    r = rng.uniform(0.08 * n, 0.22 * n)
    yy, xx = np.mgrid[0:n, 0:n]
    mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= r**2
    img[mask] = rng.uniform(lo, hi)


def add_rect(img, rng, lo=0.15, hi=0.95):
    n = img.shape[0]
    y0, x0 = rng.integers(0, n // 2, 2)
    h, w = rng.integers(n // 8, n // 2, 2)
    img[y0 : y0 + h, x0 : x0 + w] = rng.uniform(lo, hi)


def add_stripes(img, rng):
    n = img.shape[0]
    yy, xx = np.mgrid[0:n, 0:n]
    theta = rng.uniform(0, np.pi)
    freq = rng.uniform(2.0, 6.0)
    phase = rng.uniform(0, 2 * np.pi)
    wave = 0.5 + 0.5 * np.sin(
        2 * np.pi * freq * (np.cos(theta) * yy + np.sin(theta) * xx) / n + phase
    )
    band = rng.integers(0, n - n // 4)
    img[band : band + n // 4, :] = 0.3 * img[band : band + n // 4, :] + 0.7 * wave[
        band : band + n // 4, :
    ]


def scene(rng, n):
    """Piecewise-smooth test scene: smooth field + shapes + texture."""
    img = 0.35 + 0.5 * smooth_background(rng, n)
    for _ in range(int(rng.integers(2, 5))):
        add_disk(img, rng)
    for _ in range(int(rng.integers(1, 4))):
        add_rect(img, rng)
    add_stripes(img, rng)
    # soften edges very slightly so 8-bit quantization is benign
    img = 0.96 * img + 0.02
    return np.clip(img, 0.02, 0.99)


def write_kernel(path, k):
    h, w = k.shape
    lines = [f"{h} {w}"]
    for row in k:
        lines.append(" ".join("%.17g" % v for v in row))
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def main():
    os.makedirs(os.path.join(ASSETS, "train"), exist_ok=True)
    os.makedirs(os.path.join(ASSETS, "kernels"), exist_ok=True)

    rng = np.random.default_rng(20240817)
    save_image(scene(rng, 64), os.path.join(ASSETS, "img64.png"), bit_depth=8)
    save_image(scene(rng, 128), os.path.join(ASSETS, "img128.png"), bit_depth=8)

    for i in range(12):
        save_image(
            scene(rng, 96),
            os.path.join(ASSETS, "train", f"scene{i:02d}.png"),
            bit_depth=8,
        )

    write_kernel(os.path.join(ASSETS, "kernels", "uniform9.txt"), kernel_array("uniform9"))
    write_kernel(
        os.path.join(ASSETS, "kernels", "gaussian25.txt"), kernel_array("gaussian25")
    )
    print("assets written to", os.path.abspath(ASSETS))


if __name__ == "__main__":
    main()
