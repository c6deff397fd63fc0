#!/usr/bin/env python3
"""Train the small 784-128-10 ReLU MLP shipped as the test fixture bundle.

Writes <out>.json (manifest) and <out>.bin (little-endian float32 blob) in the
snn-sim weights format, plus <out>.log with the held-out accuracy.

    python3 scripts/make_fixture.py data/mnist tests/data/mlp_784_128_10
"""
import gzip
import json
import struct
import sys
import zlib
from pathlib import Path

import numpy as np
import torch
from torch import nn


def read_idx(path):
    with gzip.open(path, "rb") as f:
        data = f.read()
    magic = struct.unpack(">I", data[:4])[0]
    ndim = magic & 0xFF
    dims = struct.unpack(">" + "I" * ndim, data[4 : 4 + 4 * ndim])
    return np.frombuffer(data[4 + 4 * ndim :], dtype=np.uint8).reshape(dims)


def load_split(root, name):
    x = read_idx(root / f"{name}-images.idx3.gz").reshape(-1, 784) / 255.0
    y = read_idx(root / f"{name}-labels.idx1.gz")
    return torch.tensor(x, dtype=torch.float32), torch.tensor(y, dtype=torch.long)


def percentile_nonzero(values, p):
    nz = values[values > 0]
    return float(np.percentile(nz, p * 100.0)) if nz.size else 0.0


def export(model, stats, out):
    layers, chunks, offset = [], [], 0
    linears = [m for m in model if isinstance(m, nn.Linear)]
    for i, lin in enumerate(linears):
        w = lin.weight.detach().numpy().astype("<f4")
        b = lin.bias.detach().numpy().astype("<f4")
        entry = {
            "activation": "relu" if i + 1 < len(linears) else "linear",
            "kind": "dense",
            "name": f"fc{i + 1}",
            "threshold": 1.0,
            "weights": {"offset": offset, "shape": list(w.shape)},
        }
        offset += w.nbytes
        entry["bias"] = {"offset": offset, "shape": list(b.shape)}
        offset += b.nbytes
        chunks += [w.tobytes(), b.tobytes()]
        layers.append(entry)
    blob = b"".join(chunks)
    manifest = {
        "activation_stats": {"percentile": 0.999, "values": stats},
        "blob": {"bytes": len(blob), "crc32": zlib.crc32(blob), "file": out.name + ".bin"},
        "class_count": 10,
        "format": "snn-sim-weights",
        "format_version": 1,
        "input_shape": [784],
        "layers": layers,
        "normalized": False,
    }
    out.with_suffix(".bin").write_bytes(blob)
    out.with_suffix(".json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def main(data_root, out):
    data_root, out = Path(data_root), Path(out)
    torch.manual_seed(0)
    torch.set_num_threads(1)
    x_train, y_train = load_split(data_root, "train")
    x_test, y_test = load_split(data_root, "test")
    x_calib, _ = load_split(data_root, "calib")

    model = nn.Sequential(nn.Linear(784, 128), nn.ReLU(), nn.Linear(128, 10))
    opt = torch.optim.Adam(model.parameters(), lr=1e-3, weight_decay=1e-5)
    gen = torch.Generator().manual_seed(0)
    sched = torch.optim.lr_scheduler.CosineAnnealingLR(opt, T_max=30)
    images = x_train.reshape(-1, 1, 28, 28)
    for epoch in range(30):
        perm = torch.randperm(len(x_train), generator=gen)
        for i in range(0, len(perm), 64):
            idx = perm[i : i + 64]
            # random +-2 pixel shifts
            dx, dy = torch.randint(-2, 3, (2,), generator=gen).tolist()
            batch = torch.roll(images[idx], shifts=(dy, dx), dims=(2, 3)).reshape(-1, 784)
            loss = nn.functional.cross_entropy(model(batch), y_train[idx])
            opt.zero_grad()
            loss.backward()
            opt.step()
        sched.step()

    with torch.no_grad():
        acc = (model(x_test).argmax(1) == y_test).float().mean().item()
        hidden = torch.relu(model[0](x_calib)).numpy()
        logits = torch.relu(model(x_calib)).numpy()
    stats = [percentile_nonzero(hidden, 0.999), percentile_nonzero(logits, 0.999)]
    out.parent.mkdir(parents=True, exist_ok=True)
    export(model, stats, out)
    correct = int(round(acc * len(y_test)))
    out.with_suffix(".log").write_text(
        f"architecture 784-128-10 relu\ntest_images {len(y_test)}\n"
        f"test_correct {correct}\ntest_accuracy {acc:.4f}\n"
    )
    print(f"test accuracy {acc:.4f}, stats {stats}")


if __name__ == "__main__":
    main(*sys.argv[1:3])
