#!/usr/bin/env python3
"""Regenerates forward_golden.json.

Straight-line reference evaluation of the Q-network forward pass on
pattern-defined weights (w[k] = scale * sin(freq * k) per array), independent
of the Rust implementation. The Rust test rebuilds the same weights from the
pattern and compares its outputs against the values stored here.
"""
import json
import math
import os

ACTIONS = 125


def pattern(n, freq, scale):
    return [scale * math.sin(freq * k) for k in range(n)]


conv1_w = pattern(20 * 3 * 3, 0.7, 0.5)
conv1_b = pattern(20, 0.3, 0.1)
conv2_w = pattern(40 * 20 * 2 * 2, 0.11, 0.2)
conv2_b = pattern(40, 0.5, 0.1)
fc1_w = pattern(180 * 360, 0.013, 0.05)
fc1_b = pattern(180, 0.9, 0.1)
fc2_w = pattern(ACTIONS * 180, 0.031, 0.05)
fc2_b = pattern(ACTIONS, 1.3, 0.1)
x = pattern(36, 0.29, 1.0)

relu = lambda v: v if v > 0.0 else 0.0

conv1 = [[[0.0] * 4 for _ in range(4)] for _ in range(20)]
for f in range(20):
    for r in range(4):
        for c in range(4):
            s = conv1_b[f]
            for kr in range(3):
                for kc in range(3):
                    s += conv1_w[f * 9 + kr * 3 + kc] * x[(r + kr) * 6 + (c + kc)]
            conv1[f][r][c] = relu(s)

conv2 = [[[0.0] * 3 for _ in range(3)] for _ in range(40)]
for f in range(40):
    for r in range(3):
        for c in range(3):
            s = conv2_b[f]
            for ch in range(20):
                for kr in range(2):
                    for kc in range(2):
                        s += (
                            conv2_w[f * 80 + ch * 4 + kr * 2 + kc]
                            * conv1[ch][r + kr][c + kc]
                        )
            conv2[f][r][c] = relu(s)

flat = [conv2[f][r][c] for f in range(40) for r in range(3) for c in range(3)]

hidden = []
for h in range(180):
    s = fc1_b[h]
    for i in range(360):
        s += fc1_w[h * 360 + i] * flat[i]
    hidden.append(relu(s))

q = []
for a in range(ACTIONS):
    s = fc2_b[a]
    for h in range(180):
        s += fc2_w[a * 180 + h] * hidden[h]
    q.append(s)

out = os.path.join(os.path.dirname(__file__), "forward_golden.json")
with open(out, "w") as fh:
    json.dump({"actions": ACTIONS, "expected_q": q}, fh, indent=1)
print(f"wrote {out} (first q values: {q[:3]})")
