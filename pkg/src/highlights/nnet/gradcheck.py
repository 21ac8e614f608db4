"""Analytic-vs-numeric gradient verification via central differences."""

from __future__ import annotations

import numpy as np

from .network import Network, NetworkSpec, cross_entropy, euclidean_loss


def _loss_only(net: Network, batch, targets, class_weights=None) -> float:
    logits = net.forward(batch, train=True)
    if net.spec.head == "softmax-classifier":
        loss, _ = cross_entropy(logits, targets, class_weights)
    else:
        loss, _ = euclidean_loss(logits, targets)
    return loss


def grad_check(
    spec: NetworkSpec,
    batch: np.ndarray,
    targets: np.ndarray,
    epsilon: float = 1e-5,
    max_params: int = 200,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and finite-difference gradients.

    Checks a random subset of at least ``max_params`` parameters (all of
    them if the network is smaller). Batch-norm runs in train mode, so
    the batch must have >= 2 samples. The relative error is
    |g_a - g_n| / max(|g_a|, |g_n|, 1e-6). Parameters whose probed
    interval straddles a non-differentiable point (relu kink, pool-argmax
    flip, detected by step-halving disagreement) are skipped, as are
    true-zero gradients where both sides are pure cancellation noise.
    """
    rng = np.random.default_rng(np.random.PCG64(seed))
    net = Network(spec, rng)

    logits = net.forward(batch, train=True)
    if spec.head == "softmax-classifier":
        _, dlogits = cross_entropy(logits, targets)
    else:
        _, dlogits = euclidean_loss(logits, targets)
    net.backward(dlogits)

    analytic = {(ln, pn): g.copy() for ln, pn, g in net.grads()}

    flat: list[tuple[str, str, int]] = []
    for ln, pn, p in net.parameters():
        for i in range(p.size):
            flat.append((ln, pn, i))
    if len(flat) > max_params:
        chosen = [flat[i] for i in rng.choice(len(flat), size=max_params, replace=False)]
    else:
        chosen = flat

    params = {(ln, pn): p for ln, pn, p in net.parameters()}
    max_err = 0.0
    for ln, pn, i in chosen:
        p = params[(ln, pn)]
        orig = p.flat[i]
        p.flat[i] = orig + epsilon
        loss_plus = _loss_only(net, batch, targets)
        p.flat[i] = orig - epsilon
        loss_minus = _loss_only(net, batch, targets)
        p.flat[i] = orig + 0.5 * epsilon
        loss_plus_h = _loss_only(net, batch, targets)
        p.flat[i] = orig - 0.5 * epsilon
        loss_minus_h = _loss_only(net, batch, targets)
        p.flat[i] = orig
        g_num = (loss_plus - loss_minus) / (2.0 * epsilon)
        g_half = (loss_plus_h - loss_minus_h) / epsilon
        g_ana = analytic[(ln, pn)].flat[i]
        # both below central-difference resolution (cancellation noise is
        # ~machine_eps * loss / epsilon): a conv bias feeding straight into
        # batch norm has a true-zero gradient and only noise to compare
        if abs(g_ana) < 1e-8 and abs(g_num) < 1e-8:
            continue
        scale = max(abs(g_ana), abs(g_num), 1e-6)
        # step-halving disagreement means a relu kink or pool-argmax flip
        # sits inside the probed interval; the difference quotient is not
        # an estimate of the derivative there. A wrong analytic gradient
        # is still caught: finite differences stay self-consistent.
        if abs(g_num - g_half) / scale > 1e-5:
            continue
        err = abs(g_ana - g_num) / scale
        max_err = max(max_err, err)
    return max_err
