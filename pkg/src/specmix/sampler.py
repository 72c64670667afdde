"""Metropolis-Hastings-within-Gibbs sampler over AR(2) kernel mixtures.

The chain state holds an ordered frequency partition of (0, 0.5) with one
kernel per block, a truncated vector of stick-breaking fractions of fixed
length M, and the concentration parameter. Trans-dimensional birth/death
moves cut or merge partition blocks; within-dimension sweeps update peak
locations, bandwidths, stick fractions, and the concentration.

The posterior log-density targeted by every accept/reject decision is

    whittle(I, 0.5 * sum_c p_c g_c) + lam * C**qexp - delta * sum_c log L_c

plus the move-specific proposal ratios quoted in the birth/death helpers.
With the default (delta, lam, qexp) = (-2, -0.5, 2) the two penalty terms
discourage vanishing bandwidths and excess components.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import betaln, expit, logit

from .ar2 import kernel_matrix, _phases
from .errors import AtTruncationLimit, InvalidState, SingleComponent
from .signals import Periodogram, refined_grid

_V_EPS = 1e-12
_QM_FLOOR = 1e-300


@dataclass(frozen=True)
class MixtureState:
    """Full sampler state; arrays are treated as immutable snapshots."""

    eps: np.ndarray    # C+1 cut points, eps[0] = 0, eps[-1] = 0.5
    psi: np.ndarray    # C peak locations, one per block
    L: np.ndarray      # C bandwidths
    V: np.ndarray      # M stick fractions in (0, 1)
    p: np.ndarray      # C active weights on the simplex
    alpha: float       # DP concentration

    @property
    def C(self) -> int:
        return self.psi.size

    @property
    def M(self) -> int:
        return self.V.size

    def validate(self) -> None:
        eps, psi, L, V, p = self.eps, self.psi, self.L, self.V, self.p
        C = psi.size
        if eps.size != C + 1 or L.size != C or p.size != C:
            raise InvalidState("inconsistent state dimensions")
        if C > V.size:
            raise InvalidState("more active components than stick fractions")
        if eps[0] != 0.0 or eps[-1] != 0.5 or np.any(np.diff(eps) <= 0):
            raise InvalidState("partition must satisfy 0 = e_0 < ... < e_C = 0.5")
        if np.any(psi <= eps[:-1]) or np.any(psi >= eps[1:]):
            raise InvalidState("each block must contain exactly one psi")
        if np.any(L <= 0):
            raise InvalidState("bandwidths must be positive")
        if np.any(V <= 0) or np.any(V >= 1):
            raise InvalidState("stick fractions must lie in (0, 1)")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-9:
            raise InvalidState("weights must lie on the simplex")
        if not self.alpha > 0:
            raise InvalidState("alpha must be positive")


@dataclass(frozen=True)
class SamplerConfig:
    """Chain settings; ``None`` for M or c_init means draw per chain."""

    delta: float = -2.0
    lam: float = -0.5
    qexp: float = 2.0
    step_psi: float = 0.01
    step_L: float = 0.05
    step_V: float = 0.5
    l_max: float = 2.0
    l_ceiling: float = 10.0
    M: int | None = None
    m_range: tuple[int, int] = (20, 30)
    c_init: int | None = None
    c_init_range: tuple[int, int] = (1, 20)
    iters: int = 20000
    burnin: int = 15000
    thin: int = 10
    alpha_prior: tuple = ("gamma", 0.1, 0.1)
    alpha_init: float = 1.0
    slice_width: float = 1.0
    seed: int = 0
    grid: np.ndarray | None = None
    grid_refine: int = 4

    def __post_init__(self):
        if not (0 < self.burnin < self.iters):
            raise ValueError("need 0 < burnin < iters")
        if min(self.step_psi, self.step_L, self.step_V) <= 0:
            raise ValueError("step sizes must be positive")
        if not (0 < self.l_max <= self.l_ceiling):
            raise ValueError("need 0 < l_max <= l_ceiling")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.M is not None and self.M < 1:
            raise ValueError("M must be >= 1")
        if self.c_init is not None:
            if self.c_init < 1 or (self.M is not None and self.c_init > self.M):
                raise ValueError("need M >= c_init >= 1")
        if self.alpha_prior[0] not in ("gamma", "lognormal"):
            raise ValueError("alpha_prior must be ('gamma', a, b) or ('lognormal', mu, sig2)")


@dataclass
class ChainOutput:
    """Thinned post-burn-in draws plus per-iteration diagnostics."""

    grid: np.ndarray
    curves: np.ndarray          # (n_draws, len(grid)) draws of sum_c p_c g_c
    states: list[MixtureState]
    loglik_trace: np.ndarray    # Whittle log-likelihood per iteration
    accept_rates: dict[str, float]


def stick_weights(V: np.ndarray, C: int) -> np.ndarray:
    """Active mixture weights: first C stick shares renormalized to sum 1."""
    V = np.asarray(V, dtype=float)
    sticks = V[:C] * np.concatenate(([1.0], np.cumprod(1.0 - V[:C - 1])))
    total = sticks.sum()
    if not total > 0:
        return np.full(C, 1.0 / C)
    return sticks / total


def count_prior_log_ratio(c_from: int, c_to: int, lam: float, qexp: float) -> float:
    """Log-prior ratio of the component count pi(C) = exp(lam * C**qexp)."""
    return lam * (float(c_to) ** qexp - float(c_from) ** qexp)


def bandwidth_prior_log_ratio(L_current: float, L_proposed: float, delta: float) -> float:
    """Bandwidth penalty contribution delta * log(L/L*) for a random-walk update."""
    return delta * (np.log(L_current) - np.log(L_proposed))


def birth_proposal_ratio(eps_lo: float, eps_hi: float, eps_star: float,
                         psi_j: float) -> float:
    """q(theta | theta*) / q(theta* | theta) for a birth splitting (eps_lo, eps_hi).

    Equals the width of the sub-block that receives the fresh location:
    ( 1(eps* < psi_j)/(eps* - eps_lo) + 1(eps* > psi_j)/(eps_hi - eps*) )^-1.
    """
    if eps_star < psi_j:
        return eps_star - eps_lo
    return eps_hi - eps_star


def death_proposal_ratio(eps_lo: float, eps_mid: float, eps_hi: float,
                         psi_star: float) -> float:
    """q ratio for removing the cut eps_mid and merging its two blocks:
    1(eps_mid > psi*)/(eps_mid - eps_lo) + 1(eps_mid < psi*)/(eps_hi - eps_mid).
    """
    if eps_mid > psi_star:
        return 1.0 / (eps_mid - eps_lo)
    return 1.0 / (eps_hi - eps_mid)


def _whittle(ordinates: np.ndarray, model: np.ndarray) -> float:
    if np.any(model <= 0) or not np.all(np.isfinite(model)):
        return -np.inf
    return float(-np.sum(np.log(model) + ordinates / model))


def _workspace(state: MixtureState, pdgm: Periodogram) -> dict:
    phases = _phases(pdgm.freqs)
    G = kernel_matrix(state.psi, state.L, pdgm.freqs, phases)
    model = 0.5 * (state.p @ G)
    return {
        "phases": phases,
        "G": G,
        "model": model,
        "ll": _whittle(pdgm.ordinates, model),
    }


def log_target(state: MixtureState, pdgm: Periodogram, cfg: SamplerConfig) -> float:
    """Posterior log-density up to a constant (uniform partition/location priors)."""
    state.validate()
    work = _workspace(state, pdgm)
    return (work["ll"]
            + cfg.lam * float(state.C) ** cfg.qexp
            - cfg.delta * float(np.sum(np.log(state.L))))


def _accept(rng: np.random.Generator, log_ratio: float) -> bool:
    u = rng.uniform()
    if np.isnan(log_ratio):
        return False
    return log_ratio >= 0 or np.log(u) < log_ratio


def birth_move(state: MixtureState, pdgm: Periodogram, cfg: SamplerConfig,
               rng: np.random.Generator, work: dict | None = None
               ) -> tuple[MixtureState, bool]:
    """Split a uniformly chosen block with a fresh cut, location, and bandwidth."""
    if state.C >= state.M:
        raise AtTruncationLimit(f"C = M = {state.M}")
    if work is None:
        work = _workspace(state, pdgm)
    C = state.C
    j = int(rng.integers(C))
    lo, hi = state.eps[j], state.eps[j + 1]
    eps_star = rng.uniform(lo, hi)
    psi_j = state.psi[j]
    if eps_star > psi_j:
        psi_star = rng.uniform(eps_star, hi)
        insert_at = j + 1
    else:
        psi_star = rng.uniform(lo, eps_star)
        insert_at = j
    L_star = rng.uniform(0.0, cfg.l_max)
    L_star = max(L_star, _V_EPS)

    eps_new = np.insert(state.eps, j + 1, eps_star)
    psi_new = np.insert(state.psi, insert_at, psi_star)
    L_new = np.insert(state.L, insert_at, L_star)
    p_new = stick_weights(state.V, C + 1)

    g_star = kernel_matrix(psi_new, L_new, pdgm.freqs, work["phases"])
    model_new = 0.5 * (p_new @ g_star)
    ll_new = _whittle(pdgm.ordinates, model_new)

    log_ratio = (ll_new - work["ll"]
                 + count_prior_log_ratio(C, C + 1, cfg.lam, cfg.qexp)
                 - cfg.delta * np.log(L_star)
                 + np.log(birth_proposal_ratio(lo, hi, eps_star, psi_j)))
    if _accept(rng, log_ratio):
        new_state = replace(state, eps=eps_new, psi=psi_new, L=L_new, p=p_new)
        work.update(G=g_star, model=model_new, ll=ll_new)
        return new_state, True
    return state, False


def death_move(state: MixtureState, pdgm: Periodogram, cfg: SamplerConfig,
               rng: np.random.Generator, work: dict | None = None
               ) -> tuple[MixtureState, bool]:
    """Remove a uniformly chosen interior cut, redrawing the merged block's kernel."""
    if state.C <= 1:
        raise SingleComponent("cannot remove the only component")
    if work is None:
        work = _workspace(state, pdgm)
    C = state.C
    j = int(rng.integers(C - 1))
    lo, mid, hi = state.eps[j], state.eps[j + 1], state.eps[j + 2]
    psi_star = rng.uniform(lo, hi)
    L_star = max(rng.uniform(0.0, cfg.l_max), _V_EPS)

    eps_new = np.delete(state.eps, j + 1)
    psi_new = np.delete(state.psi, j + 1)
    psi_new[j] = psi_star
    L_new = np.delete(state.L, j + 1)
    L_new[j] = L_star
    p_new = stick_weights(state.V, C - 1)

    g_new = kernel_matrix(psi_new, L_new, pdgm.freqs, work["phases"])
    model_new = 0.5 * (p_new @ g_new)
    ll_new = _whittle(pdgm.ordinates, model_new)

    log_ratio = (ll_new - work["ll"]
                 + count_prior_log_ratio(C, C - 1, cfg.lam, cfg.qexp)
                 - cfg.delta * (np.log(L_star)
                                - np.log(state.L[j]) - np.log(state.L[j + 1]))
                 + np.log(death_proposal_ratio(lo, mid, hi, psi_star)))
    if _accept(rng, log_ratio):
        new_state = replace(state, eps=eps_new, psi=psi_new, L=L_new, p=p_new)
        work.update(G=g_new, model=model_new, ll=ll_new)
        return new_state, True
    return state, False


def _wrap_into(x: float, lo: float, hi: float) -> float:
    width = hi - lo
    y = (x - lo) % width
    y = min(max(y, 1e-12 * width), width * (1.0 - 1e-12))
    return lo + y


def _reflect_into(x: float, lo: float, hi: float) -> float:
    period = 2.0 * (hi - lo)
    y = (x - lo) % period
    if y > hi - lo:
        y = period - y
    return lo + y


def update_locations(state: MixtureState, pdgm: Periodogram, cfg: SamplerConfig,
                     rng: np.random.Generator, work: dict | None = None
                     ) -> tuple[MixtureState, int]:
    """Uniform random-walk sweep over peak locations, wrapped into each block."""
    if work is None:
        work = _workspace(state, pdgm)
    psi = state.psi.copy()
    G = work["G"]
    model = work["model"]
    ll = work["ll"]
    accepted = 0
    for c in range(state.C):
        lo, hi = state.eps[c], state.eps[c + 1]
        prop = psi[c] + rng.uniform(-cfg.step_psi, cfg.step_psi)
        prop = _wrap_into(prop, lo, hi)
        g_new = kernel_matrix(prop, state.L[c], pdgm.freqs, work["phases"])[0]
        model_new = model + 0.5 * state.p[c] * (g_new - G[c])
        ll_new = _whittle(pdgm.ordinates, model_new)
        if _accept(rng, ll_new - ll):
            psi[c] = prop
            G = G.copy() if G is work["G"] else G
            G[c] = g_new
            model, ll = model_new, ll_new
            accepted += 1
    new_state = replace(state, psi=psi)
    work.update(G=G, model=model, ll=ll)
    return new_state, accepted


def update_bandwidths(state: MixtureState, pdgm: Periodogram, cfg: SamplerConfig,
                      rng: np.random.Generator, work: dict | None = None
                      ) -> tuple[MixtureState, int]:
    """Uniform random-walk sweep over bandwidths, reflected into (0, l_ceiling)."""
    if work is None:
        work = _workspace(state, pdgm)
    L = state.L.copy()
    G = work["G"]
    model = work["model"]
    ll = work["ll"]
    accepted = 0
    for c in range(state.C):
        prop = L[c] + rng.uniform(-cfg.step_L, cfg.step_L)
        prop = max(_reflect_into(prop, 0.0, cfg.l_ceiling), _V_EPS)
        g_new = kernel_matrix(state.psi[c], prop, pdgm.freqs, work["phases"])[0]
        model_new = model + 0.5 * state.p[c] * (g_new - G[c])
        ll_new = _whittle(pdgm.ordinates, model_new)
        log_ratio = (ll_new - ll
                     + bandwidth_prior_log_ratio(L[c], prop, cfg.delta))
        if _accept(rng, log_ratio):
            L[c] = prop
            G = G.copy() if G is work["G"] else G
            G[c] = g_new
            model, ll = model_new, ll_new
            accepted += 1
    new_state = replace(state, L=L)
    work.update(G=G, model=model, ll=ll)
    return new_state, accepted


def update_weights(state: MixtureState, pdgm: Periodogram, cfg: SamplerConfig,
                   rng: np.random.Generator, work: dict | None = None
                   ) -> tuple[MixtureState, int]:
    """Logit-scale random-walk sweep over all M stick fractions.

    Each fraction carries a Beta(1, alpha) prior; fractions beyond the active
    C components leave the likelihood unchanged but still matter for the
    concentration update, so they are refreshed against the prior alone.
    """
    if work is None:
        work = _workspace(state, pdgm)
    V = state.V.copy()
    p = state.p
    model = work["model"]
    ll = work["ll"]
    C = state.C
    a = state.alpha
    accepted = 0
    for c in range(state.M):
        v0 = V[c]
        v1 = float(expit(logit(v0) + rng.normal(0.0, cfg.step_V)))
        v1 = min(max(v1, _V_EPS), 1.0 - _V_EPS)
        log_ratio = ((a - 1.0) * (np.log1p(-v1) - np.log1p(-v0))
                     + np.log(v1) + np.log1p(-v1)
                     - np.log(v0) - np.log1p(-v0))
        if c < C:
            V_try = V.copy()
            V_try[c] = v1
            p_new = stick_weights(V_try, C)
            model_new = 0.5 * (p_new @ work["G"])
            ll_new = _whittle(pdgm.ordinates, model_new)
            log_ratio += ll_new - ll
        else:
            p_new, model_new, ll_new = p, model, ll
        if _accept(rng, log_ratio):
            V[c] = v1
            p, model, ll = p_new, model_new, ll_new
            accepted += 1
    new_state = replace(state, V=V, p=p)
    work.update(model=model, ll=ll)
    return new_state, accepted


def update_alpha_gamma(state: MixtureState, cfg: SamplerConfig,
                       rng: np.random.Generator) -> MixtureState:
    """Gibbs draw alpha ~ gamma(M + a - 1, rate = b - log q_M)."""
    kind, a, b = cfg.alpha_prior
    if kind != "gamma":
        raise ValueError("update_alpha_gamma requires a gamma alpha_prior")
    V = state.V
    q_M = max(float(V[-1] * np.prod(1.0 - V[:-1])), _QM_FLOOR)
    shape = state.M + a - 1.0
    rate = b - np.log(q_M)
    return replace(state, alpha=float(rng.gamma(shape, 1.0 / rate)))


def concentration_log_posterior(alpha: float, C: int, n_obs: int) -> float:
    """log of alpha**(C-1) * (alpha + T) * Beta(alpha + 1, T), prior excluded."""
    if alpha <= 0:
        return -np.inf
    return ((C - 1) * np.log(alpha) + np.log(alpha + n_obs)
            + betaln(alpha + 1.0, n_obs))


def slice_step(x0: float, logf, rng: np.random.Generator, width: float,
               lo: float = 0.0, max_steps: int = 50) -> float:
    """One univariate slice-sampling step with stepping out and shrinkage.

    Falls back to ``x0`` if the bracket degenerates; never leaves (lo, inf).
    """
    f0 = logf(x0)
    if not np.isfinite(f0):
        return x0
    y = f0 + np.log(rng.uniform())
    left = x0 - width * rng.uniform()
    right = left + width
    left = max(left, lo)
    steps = max_steps
    while left > lo and logf(left) > y and steps > 0:
        left = max(left - width, lo)
        steps -= 1
    steps = max_steps
    while logf(right) > y and steps > 0:
        right += width
        steps -= 1
    for _ in range(100):
        if right - left < 1e-12 * width:
            return x0
        x1 = rng.uniform(left, right)
        if logf(x1) >= y:
            return x1
        if x1 < x0:
            left = x1
        else:
            right = x1
    return x0


def update_alpha_slice(state: MixtureState, cfg: SamplerConfig,
                       rng: np.random.Generator, n_obs: int) -> MixtureState:
    """Slice-sample alpha against its marginal posterior under a lognormal prior."""
    kind, mu, sig2 = cfg.alpha_prior
    if kind != "lognormal":
        raise ValueError("update_alpha_slice requires a lognormal alpha_prior")
    C = state.C
    sd = np.sqrt(sig2)

    def logf(alpha: float) -> float:
        if alpha <= 0:
            return -np.inf
        la = np.log(alpha)
        log_prior = -la - 0.5 * ((la - mu) / sd) ** 2
        return log_prior + concentration_log_posterior(alpha, C, n_obs)

    new_alpha = slice_step(state.alpha, logf, rng, cfg.slice_width, lo=0.0)
    return replace(state, alpha=float(new_alpha))


def initial_state(pdgm: Periodogram, cfg: SamplerConfig,
                  rng: np.random.Generator) -> MixtureState:
    """Equal-width partition with mid-block peaks and uniform bandwidths."""
    M = cfg.M if cfg.M is not None else int(rng.integers(cfg.m_range[0],
                                                         cfg.m_range[1] + 1))
    if cfg.c_init is not None:
        C = cfg.c_init
    else:
        c_hi = min(cfg.c_init_range[1], M)
        C = int(rng.integers(cfg.c_init_range[0], c_hi + 1))
    C = min(C, M)
    eps = np.linspace(0.0, 0.5, C + 1)
    psi = 0.5 * (eps[:-1] + eps[1:])
    L = rng.uniform(0.0, cfg.l_max, size=C)
    L = np.maximum(L, _V_EPS)
    V = np.clip(rng.beta(1.0, cfg.alpha_init, size=M), _V_EPS, 1.0 - _V_EPS)
    p = stick_weights(V, C)
    return MixtureState(eps=eps, psi=psi, L=L, V=V, p=p, alpha=cfg.alpha_init)


def run_chain(pdgm: Periodogram, cfg: SamplerConfig,
              rng: np.random.Generator | None = None) -> ChainOutput:
    """Run one chain and collect thinned post-burn-in draws.

    Per iteration, in order: birth-or-death (probability 1/2 each), location
    sweep, bandwidth sweep, stick sweep, concentration update.
    """
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    state = initial_state(pdgm, cfg, rng)
    work = _workspace(state, pdgm)
    grid = cfg.grid if cfg.grid is not None else refined_grid(pdgm.T, cfg.grid_refine)
    grid = np.asarray(grid, dtype=float)
    grid_phases = _phases(grid)

    use_gamma = cfg.alpha_prior[0] == "gamma"
    trace = np.empty(cfg.iters)
    curves: list[np.ndarray] = []
    states: list[MixtureState] = []
    acc = {"birth": 0, "death": 0, "location": 0, "bandwidth": 0, "weight": 0}
    tot = {"birth": 0, "death": 0, "location": 0, "bandwidth": 0, "weight": 0}

    for it in range(cfg.iters):
        if rng.uniform() < 0.5:
            tot["birth"] += 1
            try:
                state, ok = birth_move(state, pdgm, cfg, rng, work)
                acc["birth"] += ok
            except AtTruncationLimit:
                pass
        else:
            tot["death"] += 1
            try:
                state, ok = death_move(state, pdgm, cfg, rng, work)
                acc["death"] += ok
            except SingleComponent:
                pass

        state, n_ok = update_locations(state, pdgm, cfg, rng, work)
        acc["location"] += n_ok
        tot["location"] += state.C

        state, n_ok = update_bandwidths(state, pdgm, cfg, rng, work)
        acc["bandwidth"] += n_ok
        tot["bandwidth"] += state.C

        state, n_ok = update_weights(state, pdgm, cfg, rng, work)
        acc["weight"] += n_ok
        tot["weight"] += state.M

        if use_gamma:
            state = update_alpha_gamma(state, cfg, rng)
        else:
            state = update_alpha_slice(state, cfg, rng, pdgm.T)

        trace[it] = work["ll"]
        if it >= cfg.burnin and (it - cfg.burnin) % cfg.thin == 0:
            states.append(state)
            curve = state.p @ kernel_matrix(state.psi, state.L, grid, grid_phases)
            curves.append(curve)

    rates = {k: (acc[k] / tot[k] if tot[k] else float("nan")) for k in acc}
    return ChainOutput(grid=grid, curves=np.asarray(curves), states=states,
                       loglik_trace=trace, accept_rates=rates)


def chain_seed(base_seed: int, chain_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((base_seed, chain_index))


def _run_chain_at(args) -> ChainOutput:
    pdgm, cfg, idx = args
    return run_chain(pdgm, cfg, np.random.default_rng(chain_seed(cfg.seed, idx)))


def run_chains(pdgm: Periodogram, cfg: SamplerConfig, n_chains: int,
               workers: int = 1) -> list[ChainOutput]:
    """Run independent chains; generator of chain i derives from (seed, i)."""
    jobs = [(pdgm, cfg, i) for i in range(n_chains)]
    if workers > 1 and n_chains > 1:
        with ProcessPoolExecutor(max_workers=min(workers, n_chains)) as pool:
            return list(pool.map(_run_chain_at, jobs))
    return [_run_chain_at(job) for job in jobs]
