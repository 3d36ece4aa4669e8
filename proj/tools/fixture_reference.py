#!/usr/bin/env python3
"""Independent PyTorch forward pass for generator fixtures.

Reads a DBW1 weight file, rebuilds the U-Net with torch.nn.functional ops,
runs the seeded fixture inputs in float64 and writes the expected float32
outputs plus the fixture JSON consumed by `deband_cli check-fixture`.

    python3 tools/fixture_reference.py --weights W.dbw --out-dir DIR \
        --name random --seeds 1 2 3
"""

import argparse
import json
import pathlib
import struct

import numpy as np
import torch
import torch.nn.functional as F

MASK = (1 << 64) - 1

ENCODER = [("enc1", 64), ("enc2", 128), ("enc3", 256), ("enc4", 512),
           ("enc5", 512), ("enc6", 512), ("enc7", 512), ("enc8", 512)]
DECODER = [("dec1", 512), ("dec2", 512), ("dec3", 512), ("dec4", 512),
           ("dec5", 256), ("dec6", 128), ("dec7", 64), ("dec8", 3)]


def read_dbw(path):
    raw = pathlib.Path(path).read_bytes()
    if raw[:4] != b"DBW1":
        raise ValueError("bad magic")
    (mlen,) = struct.unpack_from("<Q", raw, 4)
    manifest = json.loads(raw[12:12 + mlen])
    blob = raw[12 + mlen:]
    tensors = {}
    for t in manifest["tensors"]:
        arr = np.frombuffer(blob, dtype="<f4", count=t["length"] // 4, offset=t["offset"])
        tensors[(t["layer"], t["role"])] = torch.from_numpy(
            arr.astype(np.float64).reshape(t["shape"]))
    return tensors


def splitmix64_bytes(seed, count):
    out = bytearray(count)
    s = seed & MASK
    for i in range(count):
        s = (s + 0x9E3779B97F4A7C15) & MASK
        z = s
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        z ^= z >> 31
        out[i] = z >> 56
    return out


def fixture_input(seed, width, height):
    rgb = np.frombuffer(bytes(splitmix64_bytes(seed, width * height * 3)), dtype=np.uint8)
    hwc = rgb.reshape(height, width, 3).astype(np.float64)
    return torch.from_numpy(hwc / 127.5 - 1.0).permute(2, 0, 1).unsqueeze(0)


def norm(x):
    return F.instance_norm(x, eps=1e-5)


def forward(w, x):
    skips = []
    h = x
    for i, (name, _) in enumerate(ENCODER):
        if i > 0:
            h = F.leaky_relu(h, 0.2)
        h = F.conv2d(h, w[(name, "weight")], w[(name, "bias")], stride=2, padding=1)
        if 1 <= i <= 6:
            h = norm(h)
        skips.append(h)
    d = None
    for k, (name, _) in enumerate(DECODER):
        inp = skips[7] if k == 0 else torch.cat([skips[7 - k], d], dim=1)
        d = F.conv_transpose2d(F.relu(inp), w[(name, "weight")], w[(name, "bias")],
                               stride=2, padding=1)
        if k < 7:
            d = norm(d)
    return torch.tanh(d)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--weights", required=True)
    ap.add_argument("--out-dir", required=True)
    ap.add_argument("--name", required=True, help="fixture stem")
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--size", type=int, nargs=2, default=[256, 256], metavar=("W", "H"))
    ap.add_argument("--tolerance", type=float, default=1e-4)
    ap.add_argument("--weights-name", help="weights path written into the JSON")
    args = ap.parse_args()

    torch.set_num_threads(1)
    w = read_dbw(args.weights)
    out_dir = pathlib.Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    width, height = args.size
    cases = []
    with torch.no_grad():
        for seed in args.seeds:
            y = forward(w, fixture_input(seed, width, height))[0]
            name = f"{args.name}_seed{seed}.f32"
            (out_dir / name).write_bytes(y.numpy().astype("<f4").tobytes())
            cases.append({"seed": seed, "width": width, "height": height, "expected": name})
    doc = {
        "weights": args.weights_name or pathlib.Path(args.weights).name,
        "tolerance": args.tolerance,
        "cases": cases,
    }
    (out_dir / f"{args.name}.json").write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
