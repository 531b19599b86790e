"""Finite-SNR Monte Carlo rates and two-point SDoF slopes.

Every rate uses the log-det difference attached to a rank chain,
``log2 det(I + snr X X^H) - log2 det(I + snr Y Y^H)``, normalized by the
plan's total slot count.  These forms depend on the channel and the
compression matrices only, so a trial draws exactly those two and
evaluates all requested SNRs on the same draw (common random numbers,
which keeps slope estimates low-variance).
"""

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .channel import ChannelSet, FadingParams, Trajectory, generate_channel
from .exceptions import InvalidParameterError
from .matcore import as_generator, logdet_capacity, split_seeds
from .phaseplan import ALIGNMENT_FAMILY, Scheme
from .schemes import draw_compression
from .verify import (
    build_decode_pair_alignment,
    build_decode_pair_decoding,
    build_leakage_pair_alignment,
    build_leakage_pair_decoding,
)

RESULTS_HEADER = ["scheme", "M", "N", "tau1", "tau2", "tau3", "snr_db", "trials",
                  "desired", "leakage", "secure_sum", "stderr"]


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def _chain_pairs(cs, plan, compression):
    """``[(desired_pair, leakage_pair)]`` for receivers 1 and 2."""
    if plan.scheme == Scheme.DECODING:
        dec, leak = build_decode_pair_decoding, build_leakage_pair_decoding
    elif plan.scheme in ALIGNMENT_FAMILY:
        dec, leak = build_decode_pair_alignment, build_leakage_pair_alignment
    else:
        raise InvalidParameterError(f"scheme {plan.scheme} carries no data")
    # the data decoded at receiver j leaks to receiver 3 - j
    return [(dec(cs, plan, compression, receiver=j), leak(cs, plan, compression, receiver=3 - j))
            for j in (1, 2)]


def _diff(pair, snr):
    x, y = pair
    return logdet_capacity(x, snr) - logdet_capacity(y, snr)


def per_receiver_rates(cs, plan, compression, snr):
    """Per-user ``(desired, leakage)`` in bits per slot.

    Entry j pairs user j's rate at receiver j with the leakage of user j's
    data to the other receiver; leakage is clamped at 0.
    """
    if snr == 0 or plan.scheme == Scheme.SILENT:
        return [(0.0, 0.0), (0.0, 0.0)]
    t = plan.total_slots
    return [(_diff(d, snr) / t, max(0.0, _diff(l_, snr)) / t) for d, l_ in _chain_pairs(cs, plan, compression)]


def _from_transcript(t, cs, snr, idx):
    if t.plan.scheme == Scheme.SILENT:
        return 0.0
    return sum(r[idx] for r in per_receiver_rates(cs, t.plan, t.compression, snr))


def desired_rate(t, cs, snr):
    """Sum over both receivers of the desired-information term, bits per slot."""
    return _from_transcript(t, cs, snr, 0)


def leakage_rate(t, cs, snr):
    """Sum over both receivers of the clamped leakage term, bits per slot."""
    return _from_transcript(t, cs, snr, 1)


def secure_rate(rates):
    """Clamp each user's ``desired - leakage`` at zero, then sum."""
    return sum(max(0.0, d - l_) for d, l_ in rates)


@dataclass(frozen=True)
class RateReport:
    scheme: Scheme
    config: object
    plan: object
    snr_db: float
    trials: int
    desired_rate: float
    leakage_rate: float
    secure_sum_rate: float
    std_error: float
    leakage_per_receiver: tuple = (0.0, 0.0)

    def row(self):
        p = self.plan
        return [str(self.scheme), self.config.M, self.config.N, p.tau1, p.tau2, p.tau3,
                fmt_float(self.snr_db), self.trials, fmt_float(self.desired_rate),
                fmt_float(self.leakage_rate), fmt_float(self.secure_sum_rate), fmt_float(self.std_error)]


def fmt_float(x):
    """Fixed 6-decimal rendering; ``-0.000000`` is normalized to ``0.000000``."""
    s = f"{float(x):.6f}"
    return "0.000000" if s == "-0.000000" else s


def results_csv(reports, header=True):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if header:
        w.writerow(RESULTS_HEADER)
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


def _stderr(x):
    return float(np.std(x, ddof=1) / math.sqrt(x.size)) if x.size > 1 else 0.0


def _normalize_gain(cs, traj, params):
    # The rate forms carry identity blocks for the AN and phase variables,
    # which sit at unit gain.  Dividing the channel by the trial's mean link
    # power gain, and moving that gain into the SNR, keeps those blocks and
    # the channel blocks on a common scale while preserving the relative
    # strength of near and far links.
    ref = float(np.mean(params.eta_linear * traj.distances ** (-params.pathloss_exponent)))
    if ref == 1.0:
        return cs, 1.0
    return ChannelSet(cs.config, cs.h / math.sqrt(ref)), ref


def mc_rates(config, plan, snr_dbs, trials, seed, channel_params=None, trajectory=None):
    """Monte Carlo rates for several SNRs on shared channel draws.

    Parameters
    ----------
    config : AntennaConfig
    plan : PhasePlan
    snr_dbs : sequence of float
        Transmit SNR ``P / sigma^2`` in dB; the channel matrices carry any
        pathloss on top of it.
    trials : int
    seed : int or SeedSequence
    channel_params : FadingParams, optional
        Defaults to unit-gain Rayleigh fading.
    trajectory : Trajectory, optional
        Distances per slot; trial k uses the window starting at slot
        ``k * T + 1`` (wrapping), T being the plan's duration.

    Each trial's mean link power gain is folded into the SNR.

    Returns
    -------
    list of RateReport, one per SNR, in input order.
    """
    if trials < 1:
        raise InvalidParameterError("trials must be >= 1")
    snr_dbs = [float(s) for s in snr_dbs]
    if not snr_dbs:
        raise InvalidParameterError("at least one SNR is required")
    params = channel_params or FadingParams.rayleigh()
    k = len(snr_dbs)
    desired = np.zeros((k, trials))
    leak = np.zeros((k, trials))
    leak_rx = np.zeros((k, trials, 2))
    secure = np.zeros((k, trials))
    if plan.scheme != Scheme.SILENT:
        slots = plan.total_slots
        snrs = [db_to_linear(s) for s in snr_dbs]
        for n, child in enumerate(split_seeds(seed, trials)):
            rng = as_generator(child)
            traj = None if trajectory is None else trajectory.window(n * slots + 1, slots)
            cs = generate_channel(config, traj, params, rng, slots=slots)
            cs, gain = _normalize_gain(cs, traj or Trajectory.constant(slots), params)
            comp = draw_compression(plan, config, rng)
            for i, snr in enumerate(snrs):
                r = per_receiver_rates(cs, plan, comp, snr * gain)
                desired[i, n] = r[0][0] + r[1][0]
                leak_rx[i, n] = (r[0][1], r[1][1])
                leak[i, n] = r[0][1] + r[1][1]
                secure[i, n] = secure_rate(r)
    return [
        RateReport(plan.scheme, config, plan, snr_dbs[i], trials, float(np.mean(desired[i])),
                   float(np.mean(leak[i])), float(np.mean(secure[i])), _stderr(secure[i]),
                   tuple(float(v) for v in leak_rx[i].mean(axis=0)))
        for i in range(k)
    ]


def _check_scheme(scheme, plan):
    if Scheme(scheme) != plan.scheme:
        raise InvalidParameterError(f"plan is for {plan.scheme}, scheme {scheme} requested")


def secure_sum_rate_mc(scheme, config, plan, snr_db, trials, channel_params=None, seed=0, trajectory=None):
    """Mean per-trial clamped secure sum-rate at one SNR."""
    _check_scheme(scheme, plan)
    return mc_rates(config, plan, [snr_db], trials, seed, channel_params, trajectory)[0]


@dataclass(frozen=True)
class SlopeReport:
    scheme: Scheme
    config: object
    plan: object
    snr_pair: tuple
    empirical_sdof: float
    theoretical_sdof: Fraction
    desired_slope: float
    leakage_slope: float
    leakage_slope_per_receiver: tuple
    low: RateReport
    high: RateReport

    @property
    def relative_error(self):
        th = float(self.theoretical_sdof)
        if th == 0:
            return abs(self.empirical_sdof)
        return abs(self.empirical_sdof - th) / th


def sdof_slope(scheme, config, plan, snr_pair_db, trials, seed=0, channel_params=None):
    """Two-point slope of the secure sum-rate against ``log2 snr``."""
    _check_scheme(scheme, plan)
    lo, hi = (float(s) for s in snr_pair_db)
    if lo == hi:
        raise InvalidParameterError("the two SNRs must differ")
    r_lo, r_hi = mc_rates(config, plan, [lo, hi], trials, seed, channel_params)
    dlog = math.log2(db_to_linear(hi) / db_to_linear(lo))
    per_rx = tuple((b - a) / dlog for a, b in zip(r_lo.leakage_per_receiver, r_hi.leakage_per_receiver))
    return SlopeReport(
        plan.scheme, config, plan, (lo, hi),
        (r_hi.secure_sum_rate - r_lo.secure_sum_rate) / dlog,
        plan.sdof(config),
        (r_hi.desired_rate - r_lo.desired_rate) / dlog,
        (r_hi.leakage_rate - r_lo.leakage_rate) / dlog,
        per_rx, r_lo, r_hi,
    )
