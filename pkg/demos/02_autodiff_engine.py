#!/usr/bin/env python3
"""Tour of the differentiation engine: tape-recorded primitives, reverse-mode
gradients checked against finite differences, and a few Adam steps.
"""

import numpy as np

from gripnet import LabelAdjacency, Parameter, Tape, AdamState, adam_step, xavier_init
from gripnet import autodiff as ad

rng = np.random.default_rng(0)

# Parameters carry persistent gradient buffers; a Tape records one forward
# pass and replays it backwards.
w1 = Parameter(xavier_init(4, 8, rng), "w1")
w2 = Parameter(xavier_init(8, 3, rng), "w2")
x = rng.standard_normal((5, 4))

# A sparse per-label neighbourhood: row i of spmm_mean averages the feature
# rows of i's neighbours (empty neighbourhoods give zero rows).
adj = LabelAdjacency.from_edges("demo", [(0, 1), (2, 1), (3, 4)], num_targets=5)


def forward():
    tape = Tape()
    h = ad.relu(ad.matmul(tape.constant(x), tape.parameter(w1)))
    pooled = ad.spmm_mean(adj, h)
    logits = ad.matmul(pooled, tape.parameter(w2))
    probs = ad.softmax_rows(logits)
    picked = ad.select_entries(probs, np.arange(5), np.array([0, 1, 2, 0, 1]))
    return ad.scale(ad.sum_all(ad.log(ad.clip(picked, 1e-12, None))), -1.0)


loss = forward()
loss.tape.backward(loss)
print(f"loss = {loss.value[0, 0]:.6f}")
print(f"|dL/dw1| max = {np.abs(w1.grad).max():.6f}")

# Central finite differences as an independent check of one entry.
h = 1e-6
orig = w1.value[0, 0]
w1.value[0, 0] = orig + h
up = float(forward().value[0, 0])
w1.value[0, 0] = orig - h
down = float(forward().value[0, 0])
w1.value[0, 0] = orig
fd = (up - down) / (2 * h)
print(f"analytic {w1.grad[0, 0]:+.10f} vs finite difference {fd:+.10f}")

# Adam: bias-corrected moments, gradients zeroed after each step.
params = [w1, w2]
state = AdamState(params, lr=0.05)
for step in range(60):
    for p in params:
        p.zero_grad()
    loss = forward()
    loss.tape.backward(loss)
    adam_step(params, state)
    if step % 20 == 0:
        print(f"step {step:3d}: loss {loss.value[0, 0]:.6f}")
print(f"final loss {float(forward().value[0, 0]):.6f}")
