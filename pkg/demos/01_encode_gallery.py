"""Render one synthetic series as GASF, GADF, and MTF heatmaps.

Writes a PNG and a TSIM tensor for each method into demos/out/ and prints
the value ranges so the three encodings can be compared side by side.
"""

from pathlib import Path

import numpy as np

from ts2img.encode import compose_stack, encode_series
from ts2img.imageio import render_png, write_tensor
from ts2img.series import Window, rescale_minmax

OUT = Path(__file__).parent / "out"


def main():
    OUT.mkdir(exist_ok=True)
    rng = np.random.default_rng(7)
    t = np.linspace(0.0, 6.0, 120)
    series = np.sin(2.0 * t) + 0.4 * np.sin(7.0 * t) + rng.normal(scale=0.15, size=t.size)

    print(f"series: n={series.size}, min={series.min():.3f}, max={series.max():.3f}")
    rescaled = rescale_minmax(series)
    print(f"rescaled to [{rescaled.values.min():.1f}, {rescaled.values.max():.1f}]")

    window = Window(0, series.size, {"demo": series}, label=0)
    for method in ("gasf", "gadf", "mtf"):
        image = encode_series(series, method, q=8)
        stack = compose_stack(window, method, "gray_single", q=8, channel="demo")
        png_path = OUT / f"gallery_{method}.png"
        render_png(stack, png_path)
        write_tensor(image.matrix.astype(np.float32), OUT / f"gallery_{method}.tsim")
        lo, hi = image.value_range
        print(f"{method}: matrix {image.matrix.shape}, values in [{lo:+.1f}, {hi:+.1f}] "
              f"-> {png_path.name}")

    print(f"done; artifacts in {OUT}")


if __name__ == "__main__":
    main()
