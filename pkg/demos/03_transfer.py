"""Warm-start a small-data classifier from a related source checkpoint.

Trains a 4-class source model on plentiful synthetic signals, freezes its
convolutional trunk, and grafts a fresh 2-class head for a harder target
task with only 50 training windows. Compares against training the same
architecture from scratch on those 50 windows, over three seeds.
"""

import tempfile
from pathlib import Path

import numpy as np

from ts2img.evaluate import score
from ts2img.nn import TrainConfig, save_checkpoint, train
from ts2img.transfer import (
    ArchSpec1D,
    TransferPlan,
    build_cnn1d,
    make_signal_windows,
    transfer_head,
)


def main():
    x_src, y_src = make_signal_windows(400, 4, length=100, n_channels=3, seed=1000)
    source = build_cnn1d(ArchSpec1D(n_classes=4), input_shape=(100, 3), seed=0)
    train(source, x_src, y_src, TrainConfig(epochs=6, batch_size=16, seed=0))
    acc_src = score(source.predict(x_src), y_src, 4).accuracy
    print(f"source task: 400 windows, 4 classes, train accuracy {acc_src:.3f}")

    ckpt = Path(tempfile.mkdtemp()) / "source"
    save_checkpoint(source, ckpt)
    print(f"checkpoint -> {ckpt}")

    print(f"{'seed':>4} {'transfer':>9} {'scratch':>8}")
    for seed in range(3):
        # harder target: closer classes, more noise, only 50 training windows
        x, y = make_signal_windows(200, 2, length=100, n_channels=3,
                                   seed=2000 + seed, class_offset=0.5, noise_sigma=0.6)
        cfg = TrainConfig(epochs=5, batch_size=16, seed=seed)

        warm = transfer_head(TransferPlan(ckpt), 2, seed=seed)
        frozen = [l.name for l in warm.layers if not l.trainable]
        train(warm, x[:50], y[:50], cfg)
        acc_tl = score(warm.predict(x[50:]), y[50:], 2).accuracy

        cold = build_cnn1d(ArchSpec1D(n_classes=2), input_shape=(100, 3), seed=seed)
        train(cold, x[:50], y[:50], cfg)
        acc_sc = score(cold.predict(x[50:]), y[50:], 2).accuracy
        print(f"{seed:>4} {acc_tl:>9.3f} {acc_sc:>8.3f}")

    print(f"frozen trunk layers: {', '.join(frozen)}")


if __name__ == "__main__":
    main()
