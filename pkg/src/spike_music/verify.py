"""Verification routines: analytic identities (fast) and Monte Carlo invariants (full).

The measurement functions return raw numbers so tests can apply their own
tolerances; :func:`run_checks` applies the default ones and reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import rmt
from .estimators import eigendecompose, make_grid, spike_music_spectrum
from .montecarlo import derive_seed, qf_fluctuation_experiment, run_sweep
from .rmt import MarchenkoPasturModel
from .signal_model import (
    ArrayConfig,
    assemble_observation,
    dirichlet_kernel,
    steering_matrix,
    steering_second_derivative,
    steering_vector,
)

__all__ = [
    "Check",
    "spectral_identities",
    "single_source_experiment",
    "steering_limits",
    "run_checks",
]


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"[{'PASS' if self.passed else 'FAIL'}] {self.name}: {self.detail}"


def _identity_grid():
    for c in np.linspace(0.05, 1.0, 20):
        for ratio in np.geomspace(1.05, 1e3, 20):
            yield float(c), float(math.sqrt(c) * ratio)


def spectral_identities() -> dict[str, float]:
    """Worst-case errors of the closed-form cross checks over a 20 x 20 ``(c, omega^2)`` grid."""
    fixed_point = rho_rel = var_rel = 0.0
    for c, w2 in _identity_grid():
        model = MarchenkoPasturModel(c)
        rho = rmt.solve_rho(model, w2)
        fixed_point = max(fixed_point, abs(w2 * rmt.spike_function_g(model, rho) - 1.0))
        closed = rmt.mp_rho_closed_form(model, w2)
        rho_rel = max(rho_rel, abs(rho - closed) / closed)
        v_gen = rmt.asymptotic_variance(model, w2, 1.0)
        v_mp = rmt.mp_variance_closed(model, w2, 1.0)
        var_rel = max(var_rel, abs(v_gen - v_mp) / v_mp)
    m = MarchenkoPasturModel(0.5)
    return {
        "fixed_point": fixed_point,
        "rho_rel": rho_rel,
        "var_rel": var_rel,
        "m_anchor": abs(m.stieltjes(11.55) + 2.0 / 21.0),
        "mt_anchor": abs(rmt.companion_stieltjes(m, 11.55) + 1.0 / 11.0),
        "g_anchor": abs(rmt.spike_function_g(m, 11.55) - 0.1),
    }


def single_source_experiment(
    N: int = 200, n: int = 400, omega_sq: float = 10.0, angle: float = 0.5,
    seeds: int = 200, master_seed: int = 0,
) -> dict[str, float]:  # fmt: skip
    """Means over ``seeds`` realizations of the top eigenvalue, ``b^* Pi_hat_1 b`` and ``chi_hat``.

    Also returns the mean top eigenvalue of the noise alone.
    """
    cfg = ArrayConfig(N, n, (angle,), (omega_sq,))
    noise_cfg = ArrayConfig(N, n, (angle,), (0.0,))
    model = MarchenkoPasturModel.from_dims(N, n)
    b = steering_vector(N, 1.0, angle)
    grid = make_grid(N)
    lam1, noise1, proj, chi = [], [], [], []
    for t in range(seeds):
        seed = derive_seed(master_seed, 0, t)
        eigs = eigendecompose(assemble_observation(cfg, seed).sigma)
        lam1.append(eigs.values[0])
        proj.append(abs(np.vdot(b, eigs.vectors[:, 0])) ** 2)
        chi.append(spike_music_spectrum(eigs, cfg, model, grid).function.at(angle))
        noise1.append(eigendecompose(assemble_observation(noise_cfg, seed).sigma).values[0])
    return {
        "lambda1": float(np.mean(lam1)),
        "noise_lambda1": float(np.mean(noise1)),
        "projection": float(np.mean(proj)),
        "chi_hat": float(np.mean(chi)),
    }


def steering_limits() -> dict[str, object]:
    angles = (0.5, 1.0)
    bb = {}
    for N in (100, 200, 500):
        B = steering_matrix(N, 1.0, angles)
        bb[N] = float(np.linalg.norm(B.conj().T @ B - np.eye(2), 2))
    N, n, D, phi = 2000, 4000, 1.0, 0.7
    c = N / n
    second = float(np.real(np.vdot(steering_vector(N, D, phi), steering_second_derivative(N, D, phi)))) / n**2
    d = 0.5
    return {
        "bb_norms": bb,
        "second_ratio": second / (-(c**2) * D**2 / 3.0),
        "dirichlet_third": abs(dirichlet_kernel(1000, d / 1000) - complex(0, -2 / math.pi)),
        "dirichlet_first": abs(dirichlet_kernel(1000, 0.3)),
    }


def _fast_checks() -> list[Check]:
    s = spectral_identities()
    out = [
        Check("omega^2 g(rho) = 1", s["fixed_point"] < 1e-10, f"max residual {s['fixed_point']:.2e}"),
        Check("solve_rho vs closed form", s["rho_rel"] < 1e-9, f"max rel err {s['rho_rel']:.2e}"),
        Check("general vs MP variance", s["var_rel"] < 1e-6, f"max rel err {s['var_rel']:.2e}"),
        Check(
            "anchors m, m~, g at x=11.55",
            max(s["m_anchor"], s["mt_anchor"], s["g_anchor"]) < 1e-12,
            f"errors {s['m_anchor']:.1e}, {s['mt_anchor']:.1e}, {s['g_anchor']:.1e}",
        ),
    ]
    p = rmt.predict_spike(MarchenkoPasturModel(0.5), 10.0, 1.0)
    targets = {"rho": 11.55, "sigma_sq": 2.6532663, "crlb_hs": 2.4, "bias": 0.9476190}
    worst = max(abs(getattr(p, k) - v) for k, v in targets.items())
    out.append(Check("point predictions c=0.5, w^2=10", worst < 1e-5, f"max abs err {worst:.1e}"))
    lim = steering_limits()
    norms = lim["bb_norms"]
    ok = norms[100] > norms[200] > norms[500] and norms[500] < 0.02
    out.append(Check("B^*B -> I", ok, ", ".join(f"N={k}: {v:.4f}" for k, v in norms.items())))
    out.append(
        Check("n^-2 Re b^*b'' limit", abs(lim["second_ratio"] - 1) < 0.02, f"ratio {lim['second_ratio']:.4f}")
    )
    dk = max(lim["dirichlet_third"], lim["dirichlet_first"])
    out.append(Check("Dirichlet kernel limits", dk < 1e-2, f"max deviation {dk:.2e}"))
    return out


def _full_checks(master_seed: int) -> list[Check]:
    out = []
    e = single_source_experiment(master_seed=master_seed)
    rho = 11.55
    edge = (1 + math.sqrt(0.5)) ** 2
    out.append(Check("mean top eigenvalue -> rho", abs(e["lambda1"] / rho - 1) < 0.02, f"{e['lambda1']:.4f} vs {rho}"))
    out.append(
        Check("noise top eigenvalue -> edge", abs(e["noise_lambda1"] / edge - 1) < 0.05, f"{e['noise_lambda1']:.4f} vs {edge:.4f}")
    )
    bias = 99.5 / 105
    out.append(Check("b^* Pi_hat b -> 1/zeta", abs(e["projection"] / bias - 1) < 0.02, f"{e['projection']:.5f} vs {bias:.5f}"))
    out.append(Check("chi_hat(phi_1) -> 1", abs(e["chi_hat"] - 1) < 0.02, f"{e['chi_hat']:.5f}"))

    q = qf_fluctuation_experiment(200, 400, 11.55, 2000, master_seed)
    r1, r2 = q.var_q / q.predicted_var_q, q.var_qt / q.predicted_var_qt
    out.append(Check("resolvent form variance", abs(r1 - 1) < 0.2, f"ratio {r1:.3f}"))
    out.append(Check("mixed form variance", abs(r2 - 1) < 0.1, f"ratio {r2:.3f}"))
    out.append(Check("forms uncorrelated", q.correlation < 0.05, f"|corr| {q.correlation:.3f}"))

    scen = [ArrayConfig(N, 2 * N, (0.5, 1.0), (10.0, 10.0)) for N in (20, 35, 50)]
    res = run_sweep(scen, 1000, master_seed)
    scaled = np.array([r.empirical_var * r.config.n**3 for r in res])
    spread = float(scaled.max(axis=0).max() / scaled.min(axis=0).min())
    out.append(Check("n^3 Var(phi_hat) constant in N", spread < 1.25, f"max/min {spread:.3f}"))
    return out


def run_checks(level: str = "fast", master_seed: int = 0) -> list[Check]:
    if level not in ("fast", "full"):
        raise ValueError(f"unknown verification level {level!r}")
    checks = _fast_checks()
    if level == "full":
        checks += _full_checks(master_seed)
    return checks
