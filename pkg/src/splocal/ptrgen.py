"""Desk-scale pointer-generator decoder math with analytic gradients.

Encoder token representations arrive as plain matrices (rows are tokens);
there is no pretrained encoder or LSTM recurrence here. The pooled sentence
embedding seeds the first decoder step, later step states are inputs, so
every parameter (both pooling matrices, the output projection, the copy
switches, the step states, and the encoder states themselves) receives a
gradient through the token-level cross-entropy loss. All softmaxes subtract
the row max for stability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PROB_CLAMP = 1e-12


class ShapeMismatch(Exception):
    pass


def _check(cond: bool, message: str) -> None:
    if not cond:
        raise ShapeMismatch(message)


def softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - np.max(x)
    e = np.exp(shifted)
    return e / e.sum()


@dataclass(frozen=True)
class EncoderStates:
    """Contextual token representations (N x d) and their vocabulary ids."""

    h: np.ndarray
    token_ids: tuple[int, ...]

    def __post_init__(self):
        h = np.asarray(self.h, dtype=np.float64)
        _check(h.ndim == 2 and h.shape[0] >= 1, f"encoder states must be N x d, got {h.shape}")
        _check(np.all(np.isfinite(h)), "encoder states must be finite")
        _check(len(self.token_ids) == h.shape[0], "token_ids length must equal N")
        object.__setattr__(self, "h", h)


@dataclass(frozen=True)
class PoolParams:
    w_agg: np.ndarray
    w_e: np.ndarray


def pool(enc: EncoderStates, params: PoolParams) -> np.ndarray:
    """Sentence embedding: w_agg @ relu(w_e @ mean of token vectors)."""
    mean = enc.h.mean(axis=0)
    _check(params.w_e.shape[1] == mean.shape[0], "w_e columns must match d")
    _check(params.w_agg.shape[1] == params.w_e.shape[0], "w_agg columns must match w_e rows")
    return params.w_agg @ np.maximum(params.w_e @ mean, 0.0)


@dataclass(frozen=True)
class StepDistributions:
    attention: np.ndarray  # (N,) over source positions
    context: np.ndarray    # (d,)
    p_copy: np.ndarray     # (J,) over the joint id space
    p_vocab: np.ndarray    # (J,)
    p: np.ndarray          # (J,)


def joint_size(enc: EncoderStates, w_o: np.ndarray) -> int:
    return max(w_o.shape[0], max(enc.token_ids) + 1)


def step_distributions(enc: EncoderStates, d_t: np.ndarray, w_o: np.ndarray, s_t: float) -> StepDistributions:
    """Copy, generation, and mixed output distributions for one decoder step.

    Attention scores are the dot products of the step state with each token
    representation; the copy distribution sums attention over positions that
    share a vocabulary id. Ids outside the generation vocabulary get zero
    generation probability, and vice versa for unseen source ids.
    """
    _check(0.0 < s_t < 1.0, f"switch {s_t} outside (0, 1)")
    _check(enc.h.shape[1] == d_t.shape[0], "decoder state dim must match encoder dim")
    _check(w_o.shape[1] == enc.h.shape[1], "w_o columns must match d")
    scores = enc.h @ d_t
    attention = softmax(scores)
    context = attention @ enc.h
    p_gen = softmax(w_o @ context)
    size = joint_size(enc, w_o)
    p_copy = np.zeros(size)
    np.add.at(p_copy, np.asarray(enc.token_ids), attention)
    p_vocab = np.zeros(size)
    p_vocab[: p_gen.shape[0]] = p_gen
    p = s_t * p_copy + (1.0 - s_t) * p_vocab
    return StepDistributions(attention, context, p_copy, p_vocab, p)


@dataclass(frozen=True)
class Instance:
    """One teacher-forced decode: T steps over a fixed source sentence.

    ``states`` are the decoder states for steps 1..T-1; step 0 uses the
    pooled sentence embedding.
    """

    encoder: EncoderStates
    pool_params: PoolParams
    w_o: np.ndarray
    switches: np.ndarray      # (T,)
    states: np.ndarray        # (T-1, d)
    gold_ids: tuple[int, ...]

    @property
    def steps(self) -> int:
        return len(self.gold_ids)

    def step_states(self) -> np.ndarray:
        d0 = pool(self.encoder, self.pool_params)
        _check(d0.shape[0] == self.encoder.h.shape[1], "pool output dim must equal d")
        if self.steps == 1:
            return d0[None, :]
        _check(self.states.shape == (self.steps - 1, d0.shape[0]), "states must be (T-1, d)")
        return np.vstack([d0[None, :], self.states])


@dataclass(frozen=True)
class Grads:
    w_agg: np.ndarray
    w_e: np.ndarray
    w_o: np.ndarray
    switches: np.ndarray
    states: np.ndarray
    h: np.ndarray


@dataclass(frozen=True)
class LossValue:
    loss: float
    grads: Grads


def loss_only(inst: Instance) -> float:
    states = inst.step_states()
    total = 0.0
    for t in range(inst.steps):
        dist = step_distributions(inst.encoder, states[t], inst.w_o, float(inst.switches[t]))
        total -= float(np.log(max(dist.p[inst.gold_ids[t]], PROB_CLAMP)))
    return total


def loss_and_grads(inst: Instance) -> LossValue:
    """Token-level cross-entropy over the mixed distribution, with gradients.

    Gold ids are clamped at PROB_CLAMP so zero-probability paths cannot blow
    up; a clamped step contributes zero gradient.
    """
    enc = inst.encoder
    h = enc.h
    n, d = h.shape
    v = inst.w_o.shape[0]
    ids = np.asarray(enc.token_ids)
    states = inst.step_states()

    g_w_o = np.zeros_like(inst.w_o)
    g_s = np.zeros_like(inst.switches, dtype=np.float64)
    g_states = np.zeros((inst.steps, d))
    g_h = np.zeros_like(h)
    total = 0.0

    for t in range(inst.steps):
        s_t = float(inst.switches[t])
        d_t = states[t]
        gold = inst.gold_ids[t]
        dist = step_distributions(enc, d_t, inst.w_o, s_t)
        alpha, context = dist.attention, dist.context
        p_gold = float(dist.p[gold])
        if p_gold <= PROB_CLAMP:
            total -= np.log(PROB_CLAMP)
            continue
        total -= np.log(p_gold)
        g_p = -1.0 / p_gold

        copy_gold = float(dist.p_copy[gold])
        vocab_gold = float(dist.p_vocab[gold])
        g_s[t] = g_p * (copy_gold - vocab_gold)

        # Generation side: d p_gen[gold] / d u = p[gold] * (e_gold - p_gen).
        p_gen = dist.p_vocab[:v]
        if gold < v:
            w_gold = p_gen[gold] * (np.eye(v)[gold] - p_gen)
        else:
            w_gold = np.zeros(v)
        g_u = g_p * (1.0 - s_t) * w_gold
        g_w_o += np.outer(g_u, context)
        g_context = inst.w_o.T @ g_u

        # Copy side adds directly to the attention gradient; the context path
        # adds h_i . g_context per position.
        g_alpha = g_p * s_t * (ids == gold).astype(np.float64) + h @ g_context

        # Softmax backward: dz = alpha * (g_alpha - <alpha, g_alpha>).
        g_z = alpha * (g_alpha - float(alpha @ g_alpha))
        g_states[t] = h.T @ g_z
        g_h += np.outer(g_z, d_t) + np.outer(alpha, g_context)

    # Step 0 state came from pooling; push its gradient through.
    mean = h.mean(axis=0)
    y = inst.pool_params.w_e @ mean
    relu_y = np.maximum(y, 0.0)
    g_d0 = g_states[0]
    g_w_agg = np.outer(g_d0, relu_y)
    g_relu = inst.pool_params.w_agg.T @ g_d0
    g_y = g_relu * (y > 0.0)
    g_w_e = np.outer(g_y, mean)
    g_mean = inst.pool_params.w_e.T @ g_y
    g_h += g_mean[None, :] / n

    return LossValue(
        loss=float(total),
        grads=Grads(
            w_agg=g_w_agg,
            w_e=g_w_e,
            w_o=g_w_o,
            switches=g_s,
            states=g_states[1:],
            h=g_h,
        ),
    )


def finite_difference_check(inst: Instance, epsilon: float = 1e-5) -> float:
    """Compare analytic gradients to central differences; return max rel error."""
    analytic = loss_and_grads(inst)

    def rebuild(encoder=None, pool_params=None, w_o=None, switches=None, states=None):
        return Instance(
            encoder=encoder or inst.encoder,
            pool_params=pool_params or inst.pool_params,
            w_o=inst.w_o if w_o is None else w_o,
            switches=inst.switches if switches is None else switches,
            states=inst.states if states is None else states,
            gold_ids=inst.gold_ids,
        )

    worst = 0.0

    def compare(analytic_grad, perturb):
        nonlocal worst
        flat = analytic_grad.ravel()
        for idx in range(flat.shape[0]):
            up = loss_only(perturb(idx, epsilon))
            down = loss_only(perturb(idx, -epsilon))
            numeric = (up - down) / (2 * epsilon)
            denom = max(abs(numeric), abs(flat[idx]), 1e-8)
            worst = max(worst, abs(numeric - flat[idx]) / denom)

    def perturb_array(base, idx, eps):
        out = np.array(base, dtype=np.float64)
        out.ravel()[idx] += eps
        return out

    compare(analytic.grads.w_agg, lambda i, e: rebuild(
        pool_params=PoolParams(perturb_array(inst.pool_params.w_agg, i, e), inst.pool_params.w_e)))
    compare(analytic.grads.w_e, lambda i, e: rebuild(
        pool_params=PoolParams(inst.pool_params.w_agg, perturb_array(inst.pool_params.w_e, i, e))))
    compare(analytic.grads.w_o, lambda i, e: rebuild(w_o=perturb_array(inst.w_o, i, e)))
    compare(analytic.grads.switches, lambda i, e: rebuild(switches=perturb_array(inst.switches, i, e)))
    if inst.steps > 1:
        compare(analytic.grads.states, lambda i, e: rebuild(states=perturb_array(inst.states, i, e)))
    compare(analytic.grads.h, lambda i, e: rebuild(
        encoder=EncoderStates(perturb_array(inst.encoder.h, i, e), inst.encoder.token_ids)))
    return worst


def random_instance(seed: int, max_tokens: int = 6, max_dim: int = 5, max_vocab: int = 8,
                    max_steps: int = 4) -> Instance:
    """Seeded random instance for the gradient-check suite.

    Inputs are conditioned away from the ReLU kink (|w_e @ mean| bounded
    below) so central differences stay on one linear piece.
    """
    rng = np.random.default_rng(seed)
    for _ in range(100):
        n = int(rng.integers(1, max_tokens + 1))
        d = int(rng.integers(2, max_dim + 1))
        e_dim = int(rng.integers(2, max_dim + 1))
        vocab = int(rng.integers(2, max_vocab + 1))
        steps = int(rng.integers(1, max_steps + 1))
        # Some source tokens share ids, some sit outside the generation vocab.
        id_domain = vocab + int(rng.integers(0, 3))
        token_ids = tuple(int(rng.integers(0, id_domain)) for _ in range(n))
        enc = EncoderStates(rng.normal(size=(n, d)), token_ids)
        params = PoolParams(rng.normal(size=(d, e_dim)), rng.normal(size=(e_dim, d)))
        if np.min(np.abs(params.w_e @ enc.h.mean(axis=0))) < 5e-2:
            continue
        actual_joint = max(vocab, max(token_ids) + 1)
        inst = Instance(
            encoder=enc,
            pool_params=params,
            w_o=rng.normal(size=(vocab, d)),
            switches=rng.uniform(0.1, 0.9, size=steps),
            states=rng.normal(size=(steps - 1, d)),
            gold_ids=tuple(int(rng.integers(0, actual_joint)) for _ in range(steps)),
        )
        if all(
            step_distributions(enc, st, inst.w_o, float(sw)).p[g] > 1e-6
            for st, sw, g in zip(inst.step_states(), inst.switches, inst.gold_ids)
        ):
            return inst
    raise RuntimeError(f"could not condition an instance for seed {seed}")


def gradient_check_suite(instances: int = 100, seed: int = 0, epsilon: float = 1e-5) -> float:
    """Run the finite-difference check over seeded instances; max rel error."""
    worst = 0.0
    for k in range(instances):
        inst = random_instance(seed * 10_000 + k)
        worst = max(worst, finite_difference_check(inst, epsilon))
    return worst
