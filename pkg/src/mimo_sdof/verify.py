"""Rank-chain matrices of the security and decodability analyses.

Each builder takes a ChannelSet, a plan and the compression matrices, and
returns the pair of matrices whose rank difference is the high-SNR pre-log
of a leakage or rate term.  Builders default to receiver 2 as the eavesdropper and receiver 1 as
the decoder, and take ``receiver=`` for the mirrored construction.
"""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidParameterError
from .matcore import numeric_rank
from .phaseplan import ALIGNMENT_FAMILY, PhasePlan, Scheme, classify_regime, Regime
from .schemes import PhaseChannels


def _z(r, c):
    return np.zeros((r, c), dtype=np.complex128)


def _eye(n):
    return np.eye(n, dtype=np.complex128)


def _block(rows):
    """``numpy.block`` that tolerates zero-width or zero-height pieces."""
    return np.vstack([np.hstack(row) for row in rows])


def _other(j):
    return 3 - j


def _require_scheme(plan, schemes, what):
    if plan.scheme not in schemes:
        raise InvalidParameterError(f"{what} needs a {'/'.join(map(str, schemes))} plan, got {plan.scheme}")


# ---------------------------------------------------------------------------
# decoding scheme
# ---------------------------------------------------------------------------
def build_leakage_pair_decoding(cs, plan, compression, receiver=2):
    """``(A, B)`` for the leakage of the other user's data to `receiver`.

    The columns of B are ``[u1; u2]``.  B stacks the receiver's noiseless
    Phase-I, II and III views of the AN once all data is known.
    """
    _require_scheme(plan, (Scheme.DECODING,), "the decoding leakage chain")
    k = receiver
    pc = PhaseChannels(cs, plan)
    n = cs.config.N
    t1, t2, _ = plan.taus()
    c = compression
    y1 = np.hstack([pc("I", 1, 1), pc("I", 2, 1)])  # receiver 1 Phase-I map of u
    y2 = np.hstack([pc("I", 1, 2), pc("I", 2, 2)])
    b = np.vstack([
        np.hstack([pc("I", 1, k), pc("I", 2, k)]),
        pc("II", 1, k) @ c.phi1a @ y1 + pc("II", 2, k) @ c.phi2a @ y2,
        pc("III", 1, k) @ c.phi1b @ y1 + pc("III", 2, k) @ c.phi2b @ y2,
    ])
    a = _eye(n * (t1 + t2))
    return a, b


def build_decode_pair_decoding(cs, plan, compression, receiver=1):
    """``(H_j, interferer block)`` of receiver j's stacked Phase-II/III system."""
    _require_scheme(plan, (Scheme.DECODING,), "the decoding rate chain")
    j = receiver
    pc = PhaseChannels(cs, plan)
    a1, a2 = pc("II", 1, j), pc("II", 2, j)
    b1, b2 = pc("III", 1, j), pc("III", 2, j)
    h = _block([
        [a1, a2, _z(a1.shape[0], b1.shape[1]), _z(a1.shape[0], b2.shape[1])],
        [_z(b1.shape[0], a1.shape[1]), _z(b1.shape[0], a2.shape[1]), b1, b2],
    ])
    i = _other(j)
    x, y = pc("II", i, j), pc("III", i, j)
    interferer = _block([[x, _z(x.shape[0], y.shape[1])], [_z(y.shape[0], x.shape[1]), y]])
    return h, interferer


# ---------------------------------------------------------------------------
# alignment scheme (and IA-D, which shares the same analysis)
# ---------------------------------------------------------------------------
def build_leakage_pair_alignment(cs, plan, compression, receiver=2):
    """``(C, D)`` for the leakage of the other user's data to `receiver`."""
    _require_scheme(plan, ALIGNMENT_FAMILY, "the alignment leakage chain")
    k = receiver
    pc = PhaseChannels(cs, plan)
    n = cs.config.N
    t1, t2, _ = plan.taus()
    phi, theta = compression.phi, compression.theta
    y1 = np.hstack([pc("I", 1, 1), pc("I", 2, 1)])
    y2 = np.hstack([pc("I", 1, 2), pc("I", 2, 2)])
    rec3 = pc("IV", 1, k) @ theta @ pc("III", 2, 1) @ phi  # tx1 resends y1^III
    rec2 = pc("IV", 2, k) @ theta @ pc("II", 1, 2) @ phi   # tx2 resends y2^II
    d = np.vstack([
        np.hstack([pc("I", 1, k), pc("I", 2, k)]),
        pc("II", 1, k) @ phi @ y1,
        pc("III", 2, k) @ phi @ y2,
        rec3 @ y2 + rec2 @ y1,
    ])
    i_1, i_2 = _eye(n * t1), _eye(n * t2)
    z12, z21 = _z(n * t1, n * t2), _z(n * t2, n * t1)
    if k == 2:
        c = _block([[i_1, z12], [z21, i_2], [i_1, z12], [rec3, pc("IV", 2, 2) @ theta]])
    else:
        c = _block([[i_1, z12], [i_1, z12], [z21, i_2],
                    [pc("IV", 2, 1) @ theta @ pc("II", 1, 2) @ phi, pc("IV", 1, 1) @ theta]])
    return c, d


def build_decode_pair_alignment(cs, plan, compression, receiver=1):
    """``(E, F)`` of receiver j's rate chain.

    Columns of E are the receiver's desired data and the interference it
    observes unmixed in the other data phase.  For IA-D the Phase-IV roles
    of the two transmitters are exchanged, matching that scheme's receiver.
    """
    _require_scheme(plan, ALIGNMENT_FAMILY, "the alignment rate chain")
    j = receiver
    k = _other(j)
    pc = PhaseChannels(cs, plan)
    n = cs.config.N
    t2 = plan.tau2
    theta = compression.theta
    own = "II" if j == 1 else "III"
    direct = pc(own, j, j)
    cross = pc(own, j, k)
    if plan.scheme == Scheme.IA_D:
        resent, interf = pc("IV", j, j), pc("IV", k, j)
    else:
        resent, interf = pc("IV", k, j), pc("IV", j, j)
    e = _block([
        [direct, _z(n * t2, n * t2)],
        [_z(n * t2, direct.shape[1]), _eye(n * t2)],
        [resent @ theta @ cross, interf @ theta],
    ])
    f = np.vstack([_eye(n * t2), interf @ theta])
    return e, f


# ---------------------------------------------------------------------------
# predictions and reports
# ---------------------------------------------------------------------------
def predicted_ranks(config, plan):
    """Closed-form ranks for every matrix of the plan's chains."""
    n = config.N
    t1, t2, t3 = plan.taus()
    if plan.scheme == Scheme.DECODING:
        m = config.M
        return {
            "A": n * (t1 + t2),
            "B": min(n * (t1 + t2), 2 * m * t1),
            "H1": 2 * n * t2,
            "interferer": n * t2,
        }
    if plan.scheme in ALIGNMENT_FAMILY:
        mp = config.effective_M
        return {
            "C": n * (t1 + t2),
            "D": min(n * (t1 + t2), 2 * n * t1),
            "E": n * t2 + min(n * (t2 + t3), mp * t2),
            "F": n * t2,
        }
    raise InvalidParameterError(f"no rank chain for scheme {plan.scheme}")


@dataclass(frozen=True)
class RankReport:
    scheme: Scheme
    config: object
    plan: PhasePlan
    matrix: str
    predicted: int
    measured: int

    @property
    def passed(self):
        return self.predicted == self.measured

    def row(self):
        p = self.plan
        return [str(self.scheme), self.config.M, self.config.N, p.tau1, p.tau2, p.tau3,
                self.matrix, self.predicted, self.measured, "true" if self.passed else "false"]


RANK_CSV_HEADER = ["scheme", "M", "N", "tau1", "tau2", "tau3", "matrix", "predicted", "measured", "pass"]


def rank_reports_csv(reports, header=True):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(RANK_CSV_HEADER)
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


def chain_matrices(cs, plan, compression):
    """Named rank-chain matrices for the default receivers of `plan`'s scheme."""
    if plan.scheme == Scheme.DECODING:
        a, b = build_leakage_pair_decoding(cs, plan, compression)
        h1, intf = build_decode_pair_decoding(cs, plan, compression)
        return {"A": a, "B": b, "H1": h1, "interferer": intf}
    c, d = build_leakage_pair_alignment(cs, plan, compression)
    e, f = build_decode_pair_alignment(cs, plan, compression)
    return {"C": c, "D": d, "E": e, "F": f}


def rank_reports(cs, plan, compression, tol=1e-9):
    """Measure every chain matrix of one draw against its predicted rank."""
    pred = predicted_ranks(cs.config, plan)
    return [RankReport(plan.scheme, cs.config, plan, name, pred[name], numeric_rank(mat, tol))
            for name, mat in chain_matrices(cs, plan, compression).items()]


def rank_gaps(reports):
    """``{"security": ..., "decoding": ...}`` measured and predicted gaps from one draw's reports.

    Security gap is ``rk A - rk B`` (resp. C, D).  For the alignment scheme
    the decoding gap is the shortfall ``M' tau2 - (rk E - rk F)``.
    """
    r = {x.matrix: x for x in reports}
    plan, cfg = reports[0].plan, reports[0].config
    if "A" in r:
        sec = (r["A"].measured - r["B"].measured, r["A"].predicted - r["B"].predicted)
        dec = (r["H1"].measured - r["interferer"].measured - cfg.N * plan.tau2,
               r["H1"].predicted - r["interferer"].predicted - cfg.N * plan.tau2)
        return {"security": sec, "decoding": dec}
    target = cfg.effective_M * plan.tau2
    sec = (r["C"].measured - r["D"].measured, r["C"].predicted - r["D"].predicted)
    dec = (target - (r["E"].measured - r["F"].measured), target - (r["E"].predicted - r["F"].predicted))
    return {"security": sec, "decoding": dec}


def violated_plan(config, which="security"):
    """A deliberately infeasible plan for the regime's scheme.

    ``which="security"``: decoding regime uses ``tau2 = 2M - N + 1`` (one
    slot past the security limit); alignment regimes use ``tau2 = tau1 + 1``
    with tau3 grown so decodability still holds.  ``which="decoding"``
    (alignment regimes only) sets ``tau3 = 0``.
    """
    m, n = config.M, config.N
    regime = classify_regime(config)
    if regime == Regime.SILENT:
        raise InvalidParameterError("the silent regime has no constraints to violate")
    if regime == Regime.DECODING:
        if which != "security":
            raise InvalidParameterError("the decoding scheme has no separate decoding constraint")
        return PhasePlan(Scheme.DECODING, n, 2 * m - n + 1, 0)
    scheme = Scheme.ALIGNMENT if regime == Regime.ALIGNMENT else Scheme.ALIGNMENT_CAPPED
    mp = config.effective_M
    if which == "security":
        t2 = n + 1
        return PhasePlan(scheme, n, t2, math.ceil((mp - n) * t2 / n))
    if which == "decoding":
        return PhasePlan(scheme, n, n, 0)
    raise InvalidParameterError(f"unknown constraint {which!r}")


# ---------------------------------------------------------------------------
# appendix factorizations
# ---------------------------------------------------------------------------
def _report(plan, cfg, name, pred, mat, tol):
    return RankReport(plan.scheme, cfg, plan, name, pred, numeric_rank(mat, tol))


def appendix_factors(cs, plan, compression, which):
    """Explicit factors of the appendix rank arguments.

    Returns a dict with ``U``, ``L`` and the directly built product target
    (``B`` or ``D``) plus the intermediate blocks each argument inspects.
    """
    pc = PhaseChannels(cs, plan)
    n = cs.config.N
    t1, _, _ = plan.taus()
    c = compression
    lmat = np.vstack([np.hstack([pc("I", 1, 2), pc("I", 2, 2)]),
                      np.hstack([pc("I", 1, 1), pc("I", 2, 1)])])
    i1 = _eye(n * t1)
    if which == "A-appendix":
        _require_scheme(plan, (Scheme.DECODING,), "the A-appendix factorization")
        r2 = [pc("II", 2, 2) @ c.phi2a, pc("II", 1, 2) @ c.phi1a]
        r3 = [pc("III", 2, 2) @ c.phi2b, pc("III", 1, 2) @ c.phi1b]
        u = _block([[i1, _z(n * t1, n * t1)], r2, r3])
        u_tilde = _block([[i1, _z(n * t1, n * t1)],
                          [_z(r2[1].shape[0], n * t1), r2[1]],
                          [_z(r3[1].shape[0], n * t1), r3[1]]])
        x, y = pc("II", 1, 2), pc("III", 1, 2)
        p = _block([[x, _z(x.shape[0], y.shape[1])], [_z(y.shape[0], x.shape[1]), y]])
        q = np.vstack([c.phi1a, c.phi1b])
        _, target = build_leakage_pair_decoding(cs, plan, compression)
        return {"U": u, "U_tilde": u_tilde, "P": p, "Q": q, "L": lmat, "target": target}
    if which == "B-appendix":
        _require_scheme(plan, ALIGNMENT_FAMILY, "the B-appendix factorization")
        phi, theta = c.phi, c.theta
        h12phi = pc("II", 1, 2) @ phi
        h22phi = pc("III", 2, 2) @ phi
        zr = lambda mat: _z(mat.shape[0], n * t1)  # noqa: E731
        u = _block([
            [i1, _z(n * t1, n * t1)],
            [zr(h12phi), h12phi],
            [h22phi, zr(h22phi)],
            [pc("IV", 1, 2) @ theta @ pc("III", 2, 1) @ phi, pc("IV", 2, 2) @ theta @ h12phi],
        ])
        _, target = build_leakage_pair_alignment(cs, plan, compression)
        return {"U": u, "H12_II_Phi": h12phi, "L": lmat, "target": target}
    raise InvalidParameterError(f"unknown appendix {which!r}")


def check_appendix_decomposition(cs, plan, compression, which, tol=1e-9):
    """Rank reports for the factors of an appendix argument.

    The ``UL`` row compares the rank of the product with the min of the
    factor ranks; the ``UL=target`` row has predicted 0 and measures the
    number of entries where ``U @ L`` and the directly built matrix differ
    beyond round-off.
    """
    cfg = cs.config
    f = appendix_factors(cs, plan, compression, which)
    n, m = cfg.N, cfg.M
    t1, t2, _ = plan.taus()
    u_pred = min(n * (t1 + t2), 2 * n * t1)
    reps = [_report(plan, cfg, "U", u_pred, f["U"], tol)]
    if which == "A-appendix":
        reps += [
            _report(plan, cfg, "U_tilde", u_pred, f["U_tilde"], tol),
            _report(plan, cfg, "P", n * t2, f["P"], tol),
            _report(plan, cfg, "Q", min(n * t2, n * t1), f["Q"], tol),
            _report(plan, cfg, "L", 2 * m * t1, f["L"], tol),
        ]
        l_pred = 2 * m * t1
    else:
        reps += [
            _report(plan, cfg, "H12_II_Phi", min(n * t1, n * t2), f["H12_II_Phi"], tol),
            _report(plan, cfg, "L", 2 * n * t1, f["L"], tol),
        ]
        l_pred = 2 * n * t1
    prod = f["U"] @ f["L"]
    reps.append(_report(plan, cfg, "UL", min(u_pred, l_pred), prod, tol))
    scale = max(1.0, float(np.max(np.abs(f["target"])))) if f["target"].size else 1.0
    mismatch = int(np.count_nonzero(np.abs(prod - f["target"]) > 1e-10 * scale))
    reps.append(RankReport(plan.scheme, cfg, plan, "UL=target", 0, mismatch))
    return reps
