#!/usr/bin/env python3
"""Builds the digits fixture: a small trained CNN in pnax float-model form
plus the held-out test set in IDX form.

Outputs (under fixtures/digits/):
  float_model.json / float_model.bin   calibrated float model
  images.idx / labels.idx              360-image test split

The quantized model and golden outputs are produced from these by the pnax
CLI, not by this script, so the C++ quantizer stays the single source of
truth for the integer pipeline.
"""

import json
import struct
import sys
from pathlib import Path

import numpy as np
import torch
import torch.nn as nn
from sklearn.datasets import load_digits

SEED = 0
TRAIN_COUNT = 1437  # 1797 total; 360 held out
EPOCHS = 60
OUT_DIR = Path(__file__).resolve().parents[2] / "fixtures" / "digits"


def byte_images():
    digits = load_digits()
    px = digits.images  # (1797, 8, 8), float counts in [0, 16]
    imgs = np.round(px * 255.0 / 16.0).astype(np.uint8)
    return imgs, digits.target.astype(np.uint8)


class Net(nn.Module):
    def __init__(self):
        super().__init__()
        self.conv1 = nn.Conv2d(1, 8, 3, padding=1)
        self.conv2 = nn.Conv2d(8, 8, 3, padding=1)
        self.conv3 = nn.Conv2d(8, 16, 3, padding=1)
        self.conv4 = nn.Conv2d(16, 16, 3, padding=1)
        self.pool = nn.MaxPool2d(2)
        self.fc = nn.Linear(64, 10)

    def forward(self, x, taps=None):
        def tap(name, t):
            if taps is not None:
                taps.setdefault(name, []).append(
                    (float(t.min()), float(t.max())))
            return t

        x = torch.relu(tap("conv1", self.conv1(x)))
        x = self.pool(torch.relu(tap("conv2", self.conv2(x))))
        x = torch.relu(tap("conv3", self.conv3(x)))
        x = self.pool(torch.relu(tap("conv4", self.conv4(x))))
        x = torch.flatten(x, 1)
        return tap("fc", self.fc(x))


def train(net, x, y):
    opt = torch.optim.Adam(net.parameters(), lr=1e-3)
    loss_fn = nn.CrossEntropyLoss()
    n = x.shape[0]
    gen = torch.Generator().manual_seed(SEED)
    for epoch in range(EPOCHS):
        perm = torch.randperm(n, generator=gen)
        total = 0.0
        for i in range(0, n, 64):
            idx = perm[i:i + 64]
            opt.zero_grad()
            loss = loss_fn(net(x[idx]), y[idx])
            loss.backward()
            opt.step()
            total += float(loss) * len(idx)
        if epoch % 10 == 9:
            print(f"epoch {epoch + 1}: loss {total / n:.4f}")


def calibrate(net, x):
    taps = {}
    with torch.no_grad():
        for i in range(0, x.shape[0], 256):
            net(x[i:i + 256], taps=taps)
    return {k: (min(lo for lo, _ in v), max(hi for _, hi in v))
            for k, v in taps.items()}


def tensor_entry(payload, arr):
    entry = {"offset": len(payload), "count": int(arr.size)}
    payload += arr.astype("<f4").tobytes()
    return entry


def conv_json(payload, conv, out_range):
    w = conv.weight.detach().numpy()
    b = conv.bias.detach().numpy()
    return {
        "kind": "conv2d",
        "in_channels": w.shape[1],
        "out_channels": w.shape[0],
        "kernel": [w.shape[2], w.shape[3]],
        "stride": [1, 1],
        "padding": [1, 1],
        "weights": tensor_entry(payload, w),
        "bias": tensor_entry(payload, b),
        "out_range": [out_range[0], out_range[1]],
    }


def write_idx(images, labels, out_dir):
    n, rows, cols = images.shape
    with open(out_dir / "images.idx", "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        f.write(images.tobytes())
    with open(out_dir / "labels.idx", "wb") as f:
        f.write(struct.pack(">II", 0x00000801, n))
        f.write(labels.tobytes())


def main():
    torch.manual_seed(SEED)
    np.random.seed(SEED)
    torch.use_deterministic_algorithms(True)

    imgs, labels = byte_images()
    order = np.random.RandomState(SEED).permutation(len(imgs))
    train_idx, test_idx = order[:TRAIN_COUNT], order[TRAIN_COUNT:]

    x_train = torch.from_numpy(imgs[train_idx] / 255.0).float().unsqueeze(1)
    y_train = torch.from_numpy(labels[train_idx]).long()
    x_test = torch.from_numpy(imgs[test_idx] / 255.0).float().unsqueeze(1)
    y_test = torch.from_numpy(labels[test_idx]).long()

    net = Net()
    train(net, x_train, y_train)
    net.eval()

    with torch.no_grad():
        acc = float((net(x_test).argmax(1) == y_test).float().mean())
    print(f"float test accuracy: {acc:.4f} over {len(y_test)} images")
    if acc < 0.97:
        sys.exit("float model trained poorly; refusing to write fixture")

    ranges = calibrate(net, x_train)
    for name, (lo, hi) in sorted(ranges.items()):
        print(f"calibration {name}: [{lo:.4f}, {hi:.4f}]")

    OUT_DIR.mkdir(parents=True, exist_ok=True)
    payload = bytearray()
    layers = [
        conv_json(payload, net.conv1, ranges["conv1"]),
        {"kind": "relu"},
        conv_json(payload, net.conv2, ranges["conv2"]),
        {"kind": "relu"},
        {"kind": "maxpool", "kernel": [2, 2], "stride": [2, 2]},
        conv_json(payload, net.conv3, ranges["conv3"]),
        {"kind": "relu"},
        conv_json(payload, net.conv4, ranges["conv4"]),
        {"kind": "relu"},
        {"kind": "maxpool", "kernel": [2, 2], "stride": [2, 2]},
        {
            "kind": "fc",
            "in_features": 64,
            "out_features": 10,
            "weights": tensor_entry(payload, net.fc.weight.detach().numpy()),
            "bias": tensor_entry(payload, net.fc.bias.detach().numpy()),
            "out_range": [ranges["fc"][0], ranges["fc"][1]],
        },
        {"kind": "argmax"},
    ]
    manifest = {
        "format": "pnax-float-model",
        "version": 1,
        "name": "digits",
        "payload": "float_model.bin",
        "input": {"shape": [1, 8, 8], "range": [0.0, 1.0]},
        "layers": layers,
    }
    (OUT_DIR / "float_model.bin").write_bytes(bytes(payload))
    with open(OUT_DIR / "float_model.json", "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")

    write_idx(imgs[test_idx], labels[test_idx], OUT_DIR)
    print(f"wrote fixture to {OUT_DIR}")


if __name__ == "__main__":
    main()
