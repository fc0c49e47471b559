"""Fast oracle-equivalence checks, each comparing two independent routes."""

from __future__ import annotations

import numpy as np
from scipy import stats

from .. import states as st
from ..baselines import build_3mubs
from ..estimator import t_quantile
from ..haar import RandomStream, sample_haar_unitary, twirl_unitary_analytic
from ..matlin import kron, partial_transpose_B, swap_operator
from ..moments import exact_Q, exact_R, fidelity_from_moments, sn_from_fidelity

__all__ = ["CHECKS", "run_selftest"]


def _check_fidelity_identity():
    rs = RandomStream(1, 0)
    worst = 0.0
    for d in (2, 3, 4):
        for k in range(5):
            rho = st.StateModel.from_dense(st.random_hs_density(d * d, rs.child(d, k)), d)
            F = fidelity_from_moments(exact_R(rho), exact_Q(rho), d)
            worst = max(worst, abs(F - st.fidelity_direct(rho)))
    return worst < 1e-10, f"max |F(R,Q) - F_direct| = {worst:.2e}"


def _check_structured_vs_dense():
    d = 5
    rho = st.thermal(d, 0.7, 0.4)
    dense = st.StateModel.from_dense(rho.to_dense(), d)
    pairs = [(rho.trace_swap(), dense.trace_swap()), (rho.trace_swap_tb(), dense.trace_swap_tb()),
             (rho.purity(), dense.purity())]
    worst = max(abs(a - b) for a, b in pairs)
    return worst < 1e-12, f"structured vs dense traces differ by {worst:.2e}"


def _check_swap_pt():
    d = 3
    phi = st.max_entangled(d).to_dense()
    err = float(np.abs(partial_transpose_B(swap_operator(d), d) - d * phi).max())
    return err < 1e-14, f"S^T_B - d phi+ = {err:.2e}"


def _check_twirl():
    d = 3
    rng = np.random.default_rng(5)
    A = rng.normal(size=(d * d, d * d)) + 1j * rng.normal(size=(d * d, d * d))
    U = sample_haar_unitary(d, RandomStream(2, 0), size=20000)
    UU = np.einsum("nij,nkl->nikjl", U, U).reshape(-1, d * d, d * d)
    emp = np.mean(UU @ A @ np.conj(np.swapaxes(UU, -1, -2)), axis=0)
    err = float(np.linalg.norm(emp - twirl_unitary_analytic(A, d)))
    return err < 0.2, f"unitary twirl Frobenius error {err:.3f} (20000 samples)"


def _check_t_quantile():
    worst = 0.0
    for dof in (1, 5, 11, 29):
        for level in (0.9, 0.99, 0.999):
            ours = t_quantile(level, dof)
            ref = stats.t.ppf(1 - (1 - level) / 2, dof)
            worst = max(worst, abs(ours - ref) / ref)
    return worst < 1e-8, f"max relative t-quantile gap vs scipy {worst:.2e}"


def _check_mubs():
    m = build_3mubs(7)
    return m.valid, f"3-MUB deviation at d=7: {m.max_deviation:.2e}"


def _check_kron():
    a, b = np.arange(4.0).reshape(2, 2), np.eye(3)
    ok = np.array_equal(kron(a, b), np.kron(a, b))
    return ok, "kron matches numpy.kron"


def _check_threshold():
    d = 5
    mu = 2
    v0 = (mu * d - 1) / (d * d - 1)
    lo = sn_from_fidelity(st.fidelity_direct(st.isotropic(d, v0 - 1e-7)), d)
    hi = sn_from_fidelity(st.fidelity_direct(st.isotropic(d, v0 + 1e-7)), d)
    return (lo, hi) == (mu, mu + 1), f"isotropic threshold at v={v0:.4f}: {lo} -> {hi}"


CHECKS = {
    "fidelity-identity": _check_fidelity_identity,
    "structured-vs-dense": _check_structured_vs_dense,
    "swap-partial-transpose": _check_swap_pt,
    "unitary-twirl": _check_twirl,
    "t-quantile": _check_t_quantile,
    "mub-construction": _check_mubs,
    "kron": _check_kron,
    "isotropic-threshold": _check_threshold,
}


def run_selftest(out=print) -> bool:
    """Run every check, print one line each, return True iff all pass."""
    all_ok = True
    for name, fn in CHECKS.items():
        try:
            ok, msg = fn()
        except Exception as exc:  # report, don't abort the remaining checks
            ok, msg = False, f"{type(exc).__name__}: {exc}"
        ok = bool(ok)
        all_ok &= ok
        out(f"[{'PASS' if ok else 'FAIL'}] {name}: {msg}")
    return all_ok
