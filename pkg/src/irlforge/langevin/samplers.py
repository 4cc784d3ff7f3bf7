"""Passive Langevin samplers reconstructing exp(beta R): the generalized
update, its alternative weighting, the classical-passive form, the
multi-kernel variance-reduced form, the active form, and the non-reversible
skew-accelerated form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator

import numpy as np

from ..errors import MissingDensity, NonFiniteIterate
from .forward import GaussianInit, GradientTrace, ProductCauchyInit
from .oracles import RewardOracle

VARIANTS = (
    "generalized",
    "generalized_alt",
    "classical_passive",
    "multikernel",
    "active",
    "nonreversible",
)


@dataclass(frozen=True)
class LangevinConfig:
    variant: str
    mu: float
    delta: float = 0.1        # Gaussian kernel bandwidth (std per coordinate)
    beta: float = 1.0         # = eps/mu when the forward step is known
    skew: np.ndarray | None = None          # nonreversible only
    pool_size: int = 50                     # multikernel only
    proposal_sigma: float = 0.1             # multikernel / active
    burn_in_frac: float = 0.2
    thin: int = 1
    init: np.ndarray | None = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")


@dataclass
class SampleCloud:
    samples: np.ndarray
    burn_in: int
    variant: str
    thin: int = 1


def gaussian_kernel(u: np.ndarray, dim: int) -> float:
    """Standard symmetric Gaussian kernel K(u), integral one."""
    u = np.asarray(u, dtype=float)
    return (2 * math.pi) ** (-dim / 2) * math.exp(-0.5 * float(u @ u))


def _as_chunks(trace, chunk_rows: int) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    if isinstance(trace, GradientTrace):
        yield from trace.chunks(chunk_rows)
    else:
        yield from trace


def _collect(samples: list, total: int, cfg: LangevinConfig, dim: int) -> SampleCloud:
    arr = np.asarray(samples).reshape(-1, dim)
    burn = int(cfg.burn_in_frac * arr.shape[0])
    return SampleCloud(arr[burn:], burn, cfg.variant, cfg.thin)


def run_sampler(
    trace,
    cfg: LangevinConfig,
    init_density: GaussianInit | None = None,
    seed: int = 0,
    oracle: RewardOracle | None = None,
    chunk_rows: int = 65_536,
) -> SampleCloud:
    """Iterate the chosen passive update over the trace; one trace row per
    step (the multikernel variant consumes `pool_size` rows per step).
    Samples are thinned on the fly; the first `burn_in_frac` are dropped.
    """
    if cfg.variant in ("generalized", "generalized_alt", "classical_passive", "nonreversible"):
        if init_density is None:
            raise MissingDensity(f"variant {cfg.variant!r} needs the initialization density")
        return _run_kernel_variant(trace, cfg, init_density, seed, chunk_rows)
    if cfg.variant == "multikernel":
        return _run_multikernel(trace, cfg, seed)
    if cfg.variant == "active":
        if oracle is None:
            raise MissingDensity("active variant needs a gradient oracle")
        return _run_active(trace, cfg, oracle, seed)
    raise ValueError(cfg.variant)


def _scalar_density(density):
    """Plain-float pdf/grad closures for the inner loop."""
    from .forward import GaussianInit, ProductCauchyInit

    exp = math.exp
    if isinstance(density, GaussianInit):
        mean = density.mean.tolist()
        inv_var = (1.0 / density.var).tolist()
        pdf_c = (2 * math.pi) ** (-density.dim / 2) / math.sqrt(float(np.prod(density.var)))

        def pdf_s(x):
            z = 0.0
            for j in range(len(x)):
                d = x[j] - mean[j]
                z += d * d * inv_var[j]
            return pdf_c * exp(-0.5 * z)

        def grad_s(x, p):
            return [-(x[j] - mean[j]) * inv_var[j] * p for j in range(len(x))]

        return pdf_s, grad_s
    if isinstance(density, ProductCauchyInit):
        s2 = density.scale**2
        base = 1.0 / (math.pi * density.scale)

        def pdf_s(x):
            p = 1.0
            for v in x:
                p *= base / (1.0 + v * v / s2)
            return p

        def grad_s(x, p):
            return [p * (-2.0 * v / (s2 * (1.0 + v * v / s2))) for v in x]

        return pdf_s, grad_s
    from .forward import GridDensity2D

    if isinstance(density, GridDensity2D):
        x0f = float(density.x_axis[0])
        y0f = float(density.y_axis[0])
        dx = float(density.x_axis[1] - density.x_axis[0])
        dy = float(density.y_axis[1] - density.y_axis[0])
        nx = density.x_axis.size
        ny = density.y_axis.size
        vals = density.values.tolist()
        gxs = density.grad_x.tolist()
        gys = density.grad_y.tolist()

        def locate(x):
            fx = (x[0] - x0f) / dx
            fy = (x[1] - y0f) / dy
            i = int(fx)
            j = int(fy)
            i = 0 if i < 0 else (nx - 2 if i > nx - 2 else i)
            j = 0 if j < 0 else (ny - 2 if j > ny - 2 else j)
            tx = fx - i
            ty = fy - j
            tx = 0.0 if tx < 0.0 else (1.0 if tx > 1.0 else tx)
            ty = 0.0 if ty < 0.0 else (1.0 if ty > 1.0 else ty)
            return i, j, tx, ty

        def bilin(tab, i, j, tx, ty):
            r0 = tab[i]
            r1 = tab[i + 1]
            return (r0[j] * (1 - tx) * (1 - ty) + r1[j] * tx * (1 - ty)
                    + r0[j + 1] * (1 - tx) * ty + r1[j + 1] * tx * ty)

        def pdf_s(x):
            i, j, tx, ty = locate(x)
            v = bilin(vals, i, j, tx, ty)
            return v if v > 1e-12 else 1e-12

        def grad_s(x, p):
            i, j, tx, ty = locate(x)
            return [bilin(gxs, i, j, tx, ty), bilin(gys, i, j, tx, ty)]

        return pdf_s, grad_s

    # generic fallback through the array interface
    def pdf_s(x):
        return float(density.pdf(np.asarray(x)[None, :])[0])

    def grad_s(x, p):
        return density.grad_pdf(np.asarray(x)[None, :])[0].tolist()

    return pdf_s, grad_s


def _run_kernel_variant(trace, cfg, density, seed, chunk_rows) -> SampleCloud:
    rng = np.random.default_rng(seed)
    dim = density.dim
    mu, beta_h = cfg.mu, 0.5 * cfg.beta
    sqmu = math.sqrt(mu)
    inv2d2 = 1.0 / (2.0 * cfg.delta * cfg.delta)
    kc = (2 * math.pi) ** (-dim / 2) * cfg.delta ** (-dim)         # normalized kernel
    kstd_c = (2 * math.pi) ** (-dim / 2)                            # unnormalized K(u)
    dpow = cfg.delta ** (-dim)
    pdf_s, grad_s = _scalar_density(density)

    skew_rows = None
    if cfg.variant == "nonreversible":
        s = np.zeros((dim, dim)) if cfg.skew is None else np.asarray(cfg.skew, dtype=float)
        if not np.allclose(s, -s.T):
            raise ValueError("skew matrix must satisfy S = -S^T")
        skew_rows = s.tolist()

    x = [0.0] * dim if cfg.init is None else [float(v) for v in cfg.init]
    exp = math.exp
    variant = cfg.variant
    out: list[list[float]] = []
    step_i = 0
    thin = cfg.thin
    for th_chunk, g_chunk in _as_chunks(trace, chunk_rows):
        n = th_chunk.shape[0]
        noise = rng.standard_normal((n, dim)).tolist()
        ths = th_chunk.tolist()
        gs = g_chunk.tolist()
        for r in range(n):
            th = ths[r]
            g = gs[r]
            nv = noise[r]
            q = 0.0
            for j in range(dim):
                d = th[j] - x[j]
                q += d * d
            kw = exp(-q * inv2d2)
            if variant == "generalized":
                pix = pdf_s(x)
                gpi = grad_s(x, pix)
                w = kc * kw * beta_h
                for j in range(dim):
                    x[j] += mu * (w * g[j] + gpi[j]) * pix + sqmu * pix * nv[j]
            elif variant == "generalized_alt":
                pit = pdf_s(th)
                gpt = grad_s(th, pit)
                ku = kstd_c * kw
                dk = mu * dpow * ku
                nk = math.sqrt(mu * dpow) * ku * pit
                for j in range(dim):
                    x[j] += dk * (beta_h * g[j] * pit + gpt[j]) + nk * nv[j]
            elif variant == "classical_passive":
                w = mu * kc * kw * beta_h / (pdf_s(x) + 1e-300)
                for j in range(dim):
                    x[j] += w * g[j] + sqmu * nv[j]
            else:  # nonreversible
                w = mu * kc * kw * beta_h / (pdf_s(x) + 1e-300)
                for j in range(dim):
                    sv = g[j]
                    row = skew_rows[j]
                    for k in range(dim):
                        sv += row[k] * g[k]
                    x[j] += w * sv + sqmu * nv[j]
            step_i += 1
            if step_i % thin == 0:
                out.append(list(x))
        if not all(math.isfinite(v) for v in x):
            raise NonFiniteIterate("sampler iterate diverged")
    return _collect(out, step_i, cfg, dim)


def _run_multikernel(trace, cfg, seed) -> SampleCloud:
    rng = np.random.default_rng(seed)
    mu, beta_h = cfg.mu, 0.5 * cfg.beta
    sqmu = math.sqrt(mu)
    inv2s2 = 1.0 / (2.0 * cfg.proposal_sigma**2)
    x = None
    out = []
    step_i = 0
    buf_t: list[np.ndarray] = []
    buf_g: list[np.ndarray] = []
    have = 0
    l_pool = cfg.pool_size
    for th_chunk, g_chunk in _as_chunks(trace, 65_536):
        if x is None:
            dim = th_chunk.shape[1]
            x = np.zeros(dim) if cfg.init is None else np.asarray(cfg.init, dtype=float)
        buf_t.append(th_chunk)
        buf_g.append(g_chunk)
        have += th_chunk.shape[0]
        if have < l_pool:
            continue
        ths = np.concatenate(buf_t)
        gs = np.concatenate(buf_g)
        n_steps = ths.shape[0] // l_pool
        used = n_steps * l_pool
        buf_t = [ths[used:]] if used < ths.shape[0] else []
        buf_g = [gs[used:]] if used < gs.shape[0] else []
        have = ths.shape[0] - used
        noise = rng.standard_normal((n_steps, x.shape[0]))
        for i in range(n_steps):
            th = ths[i * l_pool:(i + 1) * l_pool]
            g = gs[i * l_pool:(i + 1) * l_pool]
            d2 = ((th - x) ** 2).sum(axis=1)
            lw = -d2 * inv2s2
            lw -= lw.max()
            w = np.exp(lw)
            w /= w.sum()
            x = x + mu * beta_h * (w @ g) + sqmu * noise[i]
            step_i += 1
            if step_i % cfg.thin == 0:
                out.append(x.copy())
        if not np.all(np.isfinite(x)):
            raise NonFiniteIterate("multikernel iterate diverged")
    return _collect(out, step_i, cfg, x.shape[0])


def run_sampler_ensemble(
    trace_factory,
    cfg: LangevinConfig,
    chain_inits,
    init_density=None,
    seed: int = 0,
    oracle=None,
) -> SampleCloud:
    """Pool many independent short chains started from `chain_inits`.

    The kernel-weighted variants relax through a pi^2 time dilation, so a
    single chain mixes its radial coordinate very slowly; an ensemble of
    independent chains initialized at (or near) the target distribution
    gives an unbiased read of the invariant measure's moments instead.
    `trace_factory(chain_index)` supplies each chain's trace.
    """
    kept = []
    for c, x0 in enumerate(chain_inits):
        chain_cfg = LangevinConfig(
            variant=cfg.variant,
            mu=cfg.mu,
            delta=cfg.delta,
            beta=cfg.beta,
            skew=cfg.skew,
            pool_size=cfg.pool_size,
            proposal_sigma=cfg.proposal_sigma,
            burn_in_frac=cfg.burn_in_frac,
            thin=cfg.thin,
            init=np.asarray(x0, dtype=float),
        )
        cloud = run_sampler(
            trace_factory(c), chain_cfg, init_density=init_density,
            seed=seed * 1_000_003 + c, oracle=oracle,
        )
        kept.append(cloud.samples)
    pooled = np.concatenate(kept)
    return SampleCloud(pooled, 0, cfg.variant, cfg.thin)


def _run_active(trace, cfg, oracle, seed) -> SampleCloud:
    """Active variant: gradients requested at the chain's own (perturbed)
    location; `trace` only sets the number of steps when it is an int.
    """
    steps = trace if isinstance(trace, int) else len(trace)
    rng = np.random.default_rng(seed)
    dim = oracle.dim
    mu, beta_h = cfg.mu, 0.5 * cfg.beta
    sqmu = math.sqrt(mu)
    sig = cfg.proposal_sigma
    kc = (2 * math.pi) ** (-dim / 2) * cfg.delta ** (-dim)
    pc = (2 * math.pi) ** (-dim / 2) * sig ** (-dim)
    inv2d2 = 1.0 / (2.0 * cfg.delta**2)
    inv2s2 = 1.0 / (2.0 * sig**2)
    x = np.zeros(dim) if cfg.init is None else np.asarray(cfg.init, dtype=float)
    out = []
    for step_i in range(1, steps + 1):
        v = sig * rng.standard_normal(dim)
        th = x + v
        g = oracle.noisy_grad(th[None, :], rng)[0]
        q = float(v @ v)
        w = kc * math.exp(-q * inv2d2)
        p = pc * math.exp(-q * inv2s2)
        x = x + mu * w * beta_h / p * g + sqmu * rng.standard_normal(dim)
        if step_i % cfg.thin == 0:
            out.append(x.copy())
        if not np.all(np.isfinite(x)):
            raise NonFiniteIterate("active iterate diverged")
    return _collect(out, steps, cfg, dim)
