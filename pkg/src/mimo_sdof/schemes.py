"""End-to-end execution of the transmission schemes over a ChannelSet.

Signals are stacked per phase exactly like the effective block-diagonal
channels: a phase spanning slots ``t0..t1`` with ``a`` active antennas has a
transmit vector of length ``a * (t1 - t0 + 1)`` ordered slot-major.

Power policy (per transmitter, per slot budget ``power``):

* AN-only and recurrence phases spend the full budget;
* a superposed ``data + compressed feedback`` signal gives half the budget
  to each part.  Data power is split equally across the data entries; the
  feedback part is multiplied by a scalar fixed from its covariance, which
  every node can compute from the CSI and the pre-stored matrices.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .channel import effective_phase_matrix
from .exceptions import DecodeError, InvalidParameterError
from .matcore import as_generator, numeric_rank, sample_gaussian
from .phaseplan import ALIGNMENT_FAMILY, Regime, Scheme, classify_regime

PHASE_ORDER = {
    Scheme.DECODING: ("I", "II", "III"),
    Scheme.ALIGNMENT: ("I", "II", "III", "IV"),
    Scheme.ALIGNMENT_CAPPED: ("I", "II", "III", "IV"),
    Scheme.IA_D: ("Ia", "Ib", "II", "III", "IV"),
    Scheme.SILENT: (),
}


def phase_layout(config, plan):
    """Map phase name -> ``((t_start, t_end), (antennas_tx1, antennas_tx2))``."""
    m, n = config.M, config.N
    t1, t2, t3 = plan.taus()
    s = plan.scheme
    if s == Scheme.SILENT:
        return {}
    if s == Scheme.DECODING:
        return {
            "I": ((1, t1), (m, m)),
            "II": ((t1 + 1, t1 + t2), (m, n - m)),
            "III": ((t1 + t2 + 1, t1 + 2 * t2), (n - m, m)),
        }
    mp = config.effective_M
    if s == Scheme.IA_D:
        off = t1
        head = {"Ia": ((1, t1), (n, 0)), "Ib": ((t1 + 1, 2 * t1), (0, n))}
    else:
        off = 0
        head = {"I": ((1, t1), (n, n))}
    b = t1 + off
    return {
        **head,
        "II": ((b + 1, b + t2), (mp, mp)),
        "III": ((b + t2 + 1, b + 2 * t2), (mp, mp)),
        "IV": ((b + 2 * t2 + 1, b + 2 * t2 + t3), (n, n)),
    }


class PhaseChannels:
    """Effective per-phase channels ``H^{phase}_{i,j}`` of one plan.

    For IA-D, phase ``"I"`` resolves to transmitter i's own AN phase
    (``Ia`` for transmitter 1, ``Ib`` for transmitter 2).
    """

    def __init__(self, cs, plan):
        if plan.total_slots > cs.slots:
            raise InvalidParameterError(f"plan needs {plan.total_slots} slots, channel has {cs.slots}")
        self.plan = plan
        self.config = cs.config
        self.layout = phase_layout(cs.config, plan)
        self._cache = {}
        self._cs = cs

    def __call__(self, phase, i, j):
        if phase == "I" and self.plan.scheme == Scheme.IA_D:
            phase = "Ia" if i == 1 else "Ib"
        key = (phase, i, j)
        if key not in self._cache:
            rng, ants = self.layout[phase]
            self._cache[key] = effective_phase_matrix(self._cs, i, j, rng, ants[i - 1])
        return self._cache[key]

    def slots(self, phase):
        (t0, t1), _ = self.layout[phase]
        return t1 - t0 + 1


@dataclass(frozen=True)
class CompressionSet:
    """Pre-stored compression matrices; unused ones are None."""

    phi1a: np.ndarray = None
    phi2a: np.ndarray = None
    phi1b: np.ndarray = None
    phi2b: np.ndarray = None
    phi: np.ndarray = None
    theta: np.ndarray = None

    def items(self):
        return [(k, v) for k, v in self.__dict__.items() if v is not None]


def compression_shapes(config, plan):
    m, n = config.M, config.N
    t1, t2, t3 = plan.taus()
    if plan.scheme == Scheme.SILENT:
        return {}
    if plan.scheme == Scheme.DECODING:
        if n - m < 0:
            raise InvalidParameterError(f"decoding scheme needs M <= N, got M={m}, N={n}")
        return {
            "phi1a": (m * t2, n * t1),
            "phi2a": ((n - m) * t2, n * t1),
            "phi1b": ((n - m) * t2, n * t1),
            "phi2b": (m * t2, n * t1),
        }
    return {"phi": (config.effective_M * t2, n * t1), "theta": (n * t3, n * t2)}


def draw_compression(plan, config, seed_state):
    """Draw the scheme's compression matrices as i.i.d. standard complex Gaussians."""
    rng = as_generator(seed_state)
    mats = {k: sample_gaussian(r, c, 1.0, rng) for k, (r, c) in compression_shapes(config, plan).items()}
    return CompressionSet(**mats)


@dataclass(frozen=True)
class SymbolSet:
    """AN vectors ``an[i]`` and data vectors keyed by name (``s1a``, ``s1``...)."""

    an: dict
    data: dict

    def desired(self, j):
        """Concatenated data desired by receiver j, in the receiver's output order."""
        names = [k for k in ("s%da" % j, "s%db" % j, "s%d" % j) if k in self.data]
        return np.concatenate([self.data[k] for k in names])


def _data_layout(config, plan):
    """name -> (length, per-symbol power share of the budget)."""
    m, n = config.M, config.N
    t1, t2, _ = plan.taus()
    if plan.scheme == Scheme.DECODING:
        return {
            "an": (m * t1, 1.0 / m),
            "s1a": (m * t2, 0.5 / m),
            "s2a": ((n - m) * t2, 0.5 / max(n - m, 1)),
            "s1b": ((n - m) * t2, 0.5 / max(n - m, 1)),
            "s2b": (m * t2, 0.5 / m),
        }
    mp = config.effective_M
    return {"an": (n * t1, 1.0 / n), "s1": (mp * t2, 0.5 / mp), "s2": (mp * t2, 0.5 / mp)}


def draw_symbols(plan, config, power, seed_state):
    rng = as_generator(seed_state)
    if plan.scheme == Scheme.SILENT:
        return SymbolSet({}, {})
    lay = _data_layout(config, plan)
    n_an, share = lay.pop("an")
    an = {i: sample_gaussian(n_an, 1, power * share, rng)[:, 0] for i in (1, 2)}
    data = {k: sample_gaussian(n_k, 1, power * sh, rng)[:, 0] for k, (n_k, sh) in lay.items()}
    return SymbolSet(an, data)


@dataclass
class Transcript:
    """Everything one scheme run put on and received from the air."""

    config: object
    plan: object
    compression: CompressionSet
    symbols: SymbolSet
    power: float
    noise_var: float
    noise_on: bool
    scales: dict = field(default_factory=dict)
    tx: dict = field(default_factory=dict)
    rx_clean: dict = field(default_factory=dict)
    rx: dict = field(default_factory=dict)
    noise: dict = field(default_factory=dict)
    seeds: dict = field(default_factory=dict)

    @property
    def scheme(self):
        return self.plan.scheme

    @property
    def data_symbols(self):
        return sum(v.size for v in self.symbols.data.values())


class _Air:
    """Accumulates phases of one run: mixes both transmit signals into each receiver and adds AWGN."""

    def __init__(self, pc, t, rng):
        self.pc = pc
        self.t = t
        self.rng = rng

    def send(self, phase, x1, x2):
        t = self.t
        t.tx[phase, 1] = x1
        t.tx[phase, 2] = x2
        for j in (1, 2):
            y = self.pc(phase, 1, j) @ x1 + self.pc(phase, 2, j) @ x2
            if t.noise_on:
                z = sample_gaussian(y.size, 1, t.noise_var, self.rng)[:, 0]
            else:
                z = np.zeros(y.size, dtype=np.complex128)
            t.rx_clean[phase, j] = y
            t.noise[phase, j] = z
            t.rx[phase, j] = y + z


def _scale(budget, cov):
    """Scalar making ``E||scale * v||^2 == budget`` for a vector with covariance `cov`."""
    tr = float(np.real(np.trace(cov))) if cov.size else 0.0
    return np.sqrt(budget / tr) if tr > 0 else 0.0


def _rx_cov(pc, phase, j, covs, noise_var):
    k = noise_var * np.eye(pc(phase, 1, j).shape[0], dtype=np.complex128)
    for i in (1, 2):
        h = pc(phase, i, j)
        k = k + h @ covs[i] @ h.conj().T
    return k


def _new_transcript(cs, plan, power, compression, symbols, noise_on, noise_var):
    if power <= 0:
        raise InvalidParameterError("power must be positive")
    return Transcript(cs.config, plan, compression, symbols, float(power), float(noise_var), bool(noise_on))


def _decoding_prereq(config, plan):
    if plan.scheme != Scheme.DECODING:
        raise InvalidParameterError(f"expected a decoding plan, got {plan.scheme}")
    if classify_regime(config) != Regime.DECODING:
        raise InvalidParameterError(f"decoding scheme needs N/2 < M <= N, got M={config.M}, N={config.N}")


def run_decoding_scheme(cs, plan, power, compression, symbols, noise_on=True, noise_var=1.0, seed_state=0):
    """Three-phase interference decoding scheme (N/2 < M <= N)."""
    cfg = cs.config
    _decoding_prereq(cfg, plan)
    pc = PhaseChannels(cs, plan)
    t = _new_transcript(cs, plan, power, compression, symbols, noise_on, noise_var)
    air = _Air(pc, t, as_generator(seed_state))
    c, d = compression, symbols.data
    u1, u2 = symbols.an[1], symbols.an[2]
    t1, t2, _ = plan.taus()
    m, n = cfg.M, cfg.N

    air.send("I", u1, u2)
    an_cov = {i: power / m * np.eye(m * t1) for i in (1, 2)}
    ky = {j: _rx_cov(pc, "I", j, an_cov, noise_var) for j in (1, 2)}
    half = 0.5 * power * t2
    for name, phi, j in (("b1a", c.phi1a, 1), ("b2a", c.phi2a, 2), ("b1b", c.phi1b, 1), ("b2b", c.phi2b, 2)):
        t.scales[name] = _scale(half, phi @ ky[j] @ phi.conj().T)
    y1, y2 = t.rx["I", 1], t.rx["I", 2]
    s = t.scales
    air.send("II", d["s1a"] + s["b1a"] * (c.phi1a @ y1), d["s2a"] + s["b2a"] * (c.phi2a @ y2))
    air.send("III", d["s1b"] + s["b1b"] * (c.phi1b @ y1), d["s2b"] + s["b2b"] * (c.phi2b @ y2))
    return t


def _alignment_prereq(config, plan, ia_d=False):
    regime = classify_regime(config)
    if ia_d:
        if plan.scheme != Scheme.IA_D or regime != Regime.ALIGNMENT:
            raise InvalidParameterError("IA-D needs an ia-d plan and N < M <= 2N")
        return
    if plan.scheme not in (Scheme.ALIGNMENT, Scheme.ALIGNMENT_CAPPED):
        raise InvalidParameterError(f"expected an alignment plan, got {plan.scheme}")
    if regime not in (Regime.ALIGNMENT, Regime.CAPPED):
        raise InvalidParameterError(f"alignment scheme needs N < M, got M={config.M}, N={config.N}")


def _x_cov(data_var, scale, phi, ky):
    k = scale**2 * (phi @ ky @ phi.conj().T)
    return k + data_var * np.eye(k.shape[0])


def run_alignment_scheme(cs, plan, power, compression, symbols, noise_on=True, noise_var=1.0, seed_state=0):
    """Four-phase interference alignment scheme (N < M, M capped at 2N)."""
    cfg = cs.config
    _alignment_prereq(cfg, plan)
    pc = PhaseChannels(cs, plan)
    t = _new_transcript(cs, plan, power, compression, symbols, noise_on, noise_var)
    air = _Air(pc, t, as_generator(seed_state))
    phi, theta = compression.phi, compression.theta
    t1, t2, t3 = plan.taus()
    n, mp = cfg.N, cfg.effective_M
    d = symbols.data
    zeros = np.zeros(mp * t2, dtype=np.complex128)

    air.send("I", symbols.an[1], symbols.an[2])
    an_cov = {i: power / n * np.eye(n * t1) for i in (1, 2)}
    ky = {j: _rx_cov(pc, "I", j, an_cov, noise_var) for j in (1, 2)}
    half = 0.5 * power * t2
    t.scales["b1"] = _scale(half, phi @ ky[1] @ phi.conj().T)
    t.scales["b2"] = _scale(half, phi @ ky[2] @ phi.conj().T)
    b1, b2 = t.scales["b1"], t.scales["b2"]

    air.send("II", d["s1"] + b1 * (phi @ t.rx["I", 1]), zeros)
    air.send("III", zeros, d["s2"] + b2 * (phi @ t.rx["I", 2]))

    data_var = 0.5 * power / mp
    kx1 = _x_cov(data_var, b1, phi, ky[1])
    kx2 = _x_cov(data_var, b2, phi, ky[2])
    zero_cov = np.zeros((mp * t2, mp * t2))
    k_y2_ii = _rx_cov(pc, "II", 2, {1: kx1, 2: zero_cov}, noise_var)
    k_y1_iii = _rx_cov(pc, "III", 1, {1: zero_cov, 2: kx2}, noise_var)
    full = power * t3
    t.scales["g1"] = _scale(full, theta @ k_y1_iii @ theta.conj().T)
    t.scales["g2"] = _scale(full, theta @ k_y2_ii @ theta.conj().T)
    air.send("IV", t.scales["g1"] * (theta @ t.rx["III", 1]), t.scales["g2"] * (theta @ t.rx["II", 2]))
    return t


def run_ia_d_scheme(cs, plan, power, compression, symbols, noise_on=True, noise_var=1.0, seed_state=0):
    """Five-phase delayed-CSIT comparison scheme with separate AN phases.

    Each transmitter rebuilds, from delayed CSI and its own symbols, the
    noiseless output its AN produced at its receiver (Phases II/III) and
    the noiseless interference its data produced at the other receiver
    (Phase IV).
    """
    cfg = cs.config
    _alignment_prereq(cfg, plan, ia_d=True)
    pc = PhaseChannels(cs, plan)
    t = _new_transcript(cs, plan, power, compression, symbols, noise_on, noise_var)
    air = _Air(pc, t, as_generator(seed_state))
    phi, theta = compression.phi, compression.theta
    t1, t2, t3 = plan.taus()
    n, mp = cfg.N, cfg.effective_M
    d = symbols.data
    u1, u2 = symbols.an[1], symbols.an[2]
    empty = np.zeros(0, dtype=np.complex128)
    zeros = np.zeros(mp * t2, dtype=np.complex128)

    air.send("Ia", u1, empty)
    air.send("Ib", empty, u2)
    g11, g22 = pc("Ia", 1, 1), pc("Ib", 2, 2)
    r1, r2 = g11 @ u1, g22 @ u2
    an_var = power / n
    half = 0.5 * power * t2
    k_r1 = an_var * (g11 @ g11.conj().T)
    k_r2 = an_var * (g22 @ g22.conj().T)
    t.scales["b1"] = _scale(half, phi @ k_r1 @ phi.conj().T)
    t.scales["b2"] = _scale(half, phi @ k_r2 @ phi.conj().T)
    b1, b2 = t.scales["b1"], t.scales["b2"]

    x1 = d["s1"] + b1 * (phi @ r1)
    x2 = d["s2"] + b2 * (phi @ r2)
    air.send("II", x1, zeros)
    air.send("III", zeros, x2)

    data_var = 0.5 * power / mp
    h12, h21 = pc("II", 1, 2), pc("III", 2, 1)
    k_q1 = h12 @ _x_cov(data_var, b1, phi, k_r1) @ h12.conj().T
    k_q2 = h21 @ _x_cov(data_var, b2, phi, k_r2) @ h21.conj().T
    full = power * t3
    t.scales["g1"] = _scale(full, theta @ k_q1 @ theta.conj().T)
    t.scales["g2"] = _scale(full, theta @ k_q2 @ theta.conj().T)
    air.send("IV", t.scales["g1"] * (theta @ (h12 @ x1)), t.scales["g2"] * (theta @ (h21 @ x2)))
    return t


def run_silent_scheme(config):
    """Both transmitters stay silent: a zero-duration transcript."""
    from .phaseplan import SILENT_PLAN

    if classify_regime(config) != Regime.SILENT:
        raise InvalidParameterError("the silent scheme applies to M <= N/2")
    return Transcript(config, SILENT_PLAN, CompressionSet(), SymbolSet({}, {}), 1.0, 1.0, False)


RUNNERS = {
    Scheme.DECODING: run_decoding_scheme,
    Scheme.ALIGNMENT: run_alignment_scheme,
    Scheme.ALIGNMENT_CAPPED: run_alignment_scheme,
    Scheme.IA_D: run_ia_d_scheme,
}


def run_scheme(cs, plan, power, seed_state, noise_on=True, noise_var=1.0):
    """Draw compression, symbols and noise from one generator and run `plan`."""
    if plan.scheme == Scheme.SILENT:
        return run_silent_scheme(cs.config)
    rng = as_generator(seed_state)
    comp = draw_compression(plan, cs.config, rng)
    sym = draw_symbols(plan, cs.config, power, rng)
    t = RUNNERS[plan.scheme](cs, plan, power, comp, sym, noise_on, noise_var, rng)
    if isinstance(seed_state, (int, np.integer)):
        t.seeds["run"] = int(seed_state)
    return t


# ---------------------------------------------------------------------------
# receivers
# ---------------------------------------------------------------------------
def _solve(h_eff, rhs, receiver):
    cols = h_eff.shape[1]
    if numeric_rank(h_eff) < cols:
        raise DecodeError(f"receiver {receiver}: effective decoding matrix {h_eff.shape} is rank deficient")
    if h_eff.shape[0] == cols:
        return np.linalg.solve(h_eff, rhs)
    return np.linalg.lstsq(h_eff, rhs, rcond=None)[0]


def _decode_decoding(t, pc):
    c, s, rx = t.compression, t.scales, t.rx
    cfg = t.config
    m, n = cfg.M, cfg.N
    t2 = t.plan.tau2
    zi = lambda r, c_: np.zeros((r, c_), dtype=np.complex128)  # noqa: E731
    out = {}
    for j, (own_a, own_b, sa, sb) in {1: ("phi1a", "phi1b", "b1a", "b1b"), 2: ("phi2a", "phi2b", "b2a", "b2b")}.items():
        y_i = rx["I", j]
        lhs = np.concatenate([
            rx["II", j] - pc("II", j, j) @ (s[sa] * (getattr(c, own_a) @ y_i)),
            rx["III", j] - pc("III", j, j) @ (s[sb] * (getattr(c, own_b) @ y_i)),
        ])
        a2, a3 = pc("II", 1, j), pc("II", 2, j)
        b2, b3 = pc("III", 1, j), pc("III", 2, j)
        h = np.block([
            [a2, a3, zi(n * t2, b2.shape[1]), zi(n * t2, b3.shape[1])],
            [zi(n * t2, a2.shape[1]), zi(n * t2, a3.shape[1]), b2, b3],
        ])
        v = _solve(h, lhs, j)
        # unknown order: [x1^II-part, x2^II-part, x1^III-part, x2^III-part]
        sizes = np.cumsum([a2.shape[1], a3.shape[1], b2.shape[1], b3.shape[1]])
        parts = np.split(v, sizes[:-1])
        out[j] = np.concatenate([parts[0], parts[2]]) if j == 1 else np.concatenate([parts[1], parts[3]])
    _ = m
    return out[1], out[2]


def _decode_alignment(t, pc):
    phi, theta = t.compression.phi, t.compression.theta
    s, rx = t.scales, t.rx
    iad = t.plan.scheme == Scheme.IA_D
    est = {}
    for j, k, data_phase in ((1, 2, "II"), (2, 1, "III")):
        bj = s["b%d" % j]
        gj, gk = s["g%d" % j], s["g%d" % k]
        own_an = rx["Ia" if j == 1 else "Ib", j] if iad else rx["I", j]
        other_phase = "III" if j == 1 else "II"
        fb = bj * (phi @ own_an)
        cross = pc(data_phase, j, k)  # this receiver's data as seen at the other receiver
        r_a = rx[data_phase, j] - pc(data_phase, j, j) @ fb
        if iad:
            # tx k re-sends what our receiver saw of tx k's data; tx j re-sends our data's leak
            r_b = rx["IV", j] - pc("IV", k, j) @ (gk * (theta @ rx[other_phase, j])) \
                - pc("IV", j, j) @ (gj * (theta @ (cross @ fb)))
            h_b = gj * (pc("IV", j, j) @ theta @ cross)
        else:
            r_b = rx["IV", j] - pc("IV", j, j) @ (gj * (theta @ rx[other_phase, j])) \
                - pc("IV", k, j) @ (gk * (theta @ (cross @ fb)))
            h_b = gk * (pc("IV", k, j) @ theta @ cross)
        h = np.vstack([pc(data_phase, j, j), h_b])
        est[j] = _solve(h, np.concatenate([r_a, r_b]), j)
    return est[1], est[2]


def decode_receivers(t, cs):
    """Zero-forcing decode at both receivers.

    Each receiver strips the feedback terms it can rebuild from its own
    outputs and the pre-stored matrices, then solves its stacked linear
    system.  Returns ``(s1_hat, s2_hat)`` ordered like
    ``SymbolSet.desired``.

    Raises
    ------
    DecodeError
        If an effective decoding matrix lacks full column rank.
    """
    if t.plan.scheme == Scheme.SILENT:
        raise InvalidParameterError("the silent scheme carries no data")
    pc = PhaseChannels(cs, t.plan)
    if t.plan.scheme == Scheme.DECODING:
        return _decode_decoding(t, pc)
    if t.plan.scheme in ALIGNMENT_FAMILY:
        return _decode_alignment(t, pc)
    raise InvalidParameterError(f"no receiver for scheme {t.plan.scheme}")


# ---------------------------------------------------------------------------
# transcript dump
# ---------------------------------------------------------------------------
def _write_block(w, header, vec_or_mat):
    a = np.atleast_2d(np.asarray(vec_or_mat))
    if a.shape[0] == 1 and np.ndim(vec_or_mat) == 1:
        a = a.T
    rows, cols = a.shape
    w.writerow([f"# {header} rows={rows} cols={cols}"])
    for r in range(rows):
        w.writerow([f"{a[r, c].real!r}:{a[r, c].imag!r}" for c in range(cols)])


def write_transcript_csv(t, path):
    """Dump a transcript as CSV blocks, each opened by a ``# section=...`` line.

    Complex entries are written ``re:im``.  Vectors are column blocks.
    """
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        p = t.plan
        w.writerow(["# section=meta"])
        for k, v in (("scheme", p.scheme.value), ("M", t.config.M), ("N", t.config.N), ("tau1", p.tau1),
                     ("tau2", p.tau2), ("tau3", p.tau3), ("power", repr(t.power)),
                     ("noise_var", repr(t.noise_var)), ("noise_on", int(t.noise_on))):
            w.writerow([k, v])
        for k, v in sorted(t.seeds.items()):
            w.writerow([f"seed_{k}", v])
        for k, v in sorted(t.scales.items()):
            w.writerow([f"scale_{k}", repr(float(v))])
        for name, mat in t.compression.items():
            _write_block(w, f"section=compression name={name}", mat)
        for i, vec in sorted(t.symbols.an.items()):
            _write_block(w, f"section=an tx={i}", vec)
        for name, vec in sorted(t.symbols.data.items()):
            _write_block(w, f"section=data name={name}", vec)
        for phase in PHASE_ORDER[p.scheme]:
            for i in (1, 2):
                _write_block(w, f"section=tx phase={phase} node={i}", t.tx[phase, i])
            for j in (1, 2):
                _write_block(w, f"section=rx phase={phase} node={j}", t.rx[phase, j])
                _write_block(w, f"section=noise phase={phase} node={j}", t.noise[phase, j])
