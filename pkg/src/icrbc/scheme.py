"""Two-phase interference creation / resurrection transmission.

Phase 1 spends one slot per user, sending that user's K symbols raw from
the K antennas. The user without CSIT in the slot receives a clean
combination of its own symbols; everyone else overhears an interference
term. The transmitter later learns these overheard terms through delayed
CSIT.

Phase 2 spends K-1 slots. In a slot where user ``r`` has no CSIT and the
rest are perfect, the transmitter sends

* for every perfect user ``i``: the term ``r`` overheard in ``i``'s
  phase-1 slot, beamformed to be invisible to the other perfect users;
* the term the anchor user ``q`` overheard in ``r``'s phase-1 slot,
  beamformed to be invisible to all perfect users.

Each perfect user then sees one clean new combination of its own symbols.
User ``r`` sees its own new combination plus terms it already overheard,
which it subtracts using its stored phase-1 observations. The anchor is the
one user that is never without CSIT in phase 2.

Users and slots are 0-based throughout.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .channel import (ChannelRealization, CsitPattern, D, N, P, complex_gaussian,
                      icr_pattern, sample_channel)
from .errors import (DegenerateBeamError, MissingObservationError,
                     PatternInfeasibleError, SingularSystemError,
                     StructuralViolationError)

DECODE_TOL = 1e-6
PROPORTIONALITY_TOL = 1e-8
_SYMBOL_STREAM = 1
_NOISE_STREAM = 2


# -- symbolic plan ---------------------------------------------------------

@dataclass(frozen=True)
class Term:
    """Interference overheard in phase 1.

    ``observer`` heard it in phase-1 slot ``slot``, which carried the
    symbols of ``owner``. Its value is ``H_observer(slot) @ X(slot)``.
    """

    owner: int
    observer: int
    slot: int


@dataclass(frozen=True)
class BeamSpec:
    term: Term
    null_at: tuple[int, ...]
    # perfect user that receives the term cleanly; None for the term aimed
    # at the slot's user without CSIT
    target: int | None


@dataclass(frozen=True)
class SlotPlan:
    slot: int
    blind_user: int
    beams: tuple[BeamSpec, ...]


@dataclass(frozen=True)
class TransmissionPlan:
    pattern: CsitPattern
    phase1_owner: tuple[int, ...]
    anchor: int
    phase2: tuple[SlotPlan, ...]

    @property
    def K(self) -> int:
        return self.pattern.K

    def phase1_slot(self, user: int) -> int:
        return self.phase1_owner.index(user)

    def slot_plan(self, t: int) -> SlotPlan:
        for sp in self.phase2:
            if sp.slot == t:
                return sp
        raise ValueError(f"slot {t} is not a phase-2 slot")

    def row_sources(self, i: int) -> list[int]:
        """Users j whose channel row in ``i``'s phase-1 slot shapes each of
        ``i``'s combinations, in slot order."""
        sources = [i]
        for sp in self.phase2:
            if sp.blind_user == i:
                sources.append(self.anchor)
            else:
                sources.append(sp.blind_user)
        return sources


def plan_transmission(pattern: CsitPattern) -> TransmissionPlan:
    """Derive which term every phase-2 beam carries and where it is nulled.

    Raises
    ------
    PatternInfeasibleError
        If the pattern is not K phase-1 slots (one N, rest D, each user N
        once) followed by K-1 phase-2 slots (one N, rest P, distinct N
        users), or if a beam needs CSIT the pattern does not provide.
    """
    K = pattern.K
    if K < 2:
        raise PatternInfeasibleError("need at least two users")
    if pattern.n != 2 * K - 1:
        raise PatternInfeasibleError(f"expected {2 * K - 1} slots, got {pattern.n}")

    owners = []
    for t in range(K):
        blind = pattern.users_in(t, N)
        if len(blind) != 1 or len(pattern.users_in(t, D)) != K - 1:
            raise PatternInfeasibleError(
                f"phase-1 slot {t} must have one N user and D for the rest")
        owners.append(blind[0])
    if sorted(owners) != list(range(K)):
        raise PatternInfeasibleError("each user must lack CSIT in exactly one phase-1 slot")

    blind2 = []
    for t in range(K, 2 * K - 1):
        blind = pattern.users_in(t, N)
        if len(blind) != 1 or len(pattern.users_in(t, P)) != K - 1:
            raise PatternInfeasibleError(
                f"phase-2 slot {t} must have one N user and P for the rest")
        blind2.append(blind[0])
    if len(set(blind2)) != K - 1:
        raise PatternInfeasibleError("phase-2 N users must be distinct")
    anchor = (set(range(K)) - set(blind2)).pop()

    slot_of = {u: t for t, u in enumerate(owners)}
    plans = []
    for t, r in zip(range(K, 2 * K - 1), blind2):
        perfect = tuple(i for i in range(K) if i != r)
        beams = [BeamSpec(Term(owner=i, observer=r, slot=slot_of[i]),
                          null_at=tuple(j for j in perfect if j != i), target=i)
                 for i in perfect]
        beams.append(BeamSpec(Term(owner=r, observer=anchor, slot=slot_of[r]),
                              null_at=perfect, target=None))
        for b in beams:
            if pattern.state(b.term.observer, b.term.slot) is not D:
                raise PatternInfeasibleError(
                    f"term needs delayed CSIT of user {b.term.observer} in slot {b.term.slot}")
            for j in b.null_at:
                if pattern.state(j, t) is not P:
                    raise PatternInfeasibleError(
                        f"nulling at user {j} needs perfect CSIT in slot {t}")
        plans.append(SlotPlan(slot=t, blind_user=r, beams=tuple(beams)))
    return TransmissionPlan(pattern=pattern, phase1_owner=tuple(owners),
                            anchor=anchor, phase2=tuple(plans))


# -- numeric transmission --------------------------------------------------

def random_symbols(K: int, seed: int) -> np.ndarray:
    """K x K block of unit-power CN(0, 1) symbols; row i belongs to user i."""
    if K < 1:
        raise ValueError("K must be positive")
    return complex_gaussian(seed, (_SYMBOL_STREAM,), K * K).reshape(K, K)


@dataclass
class Beam:
    spec: BeamSpec
    column: int          # projector column used as beam direction
    vector: np.ndarray   # scaled beam; X gets vector * term value
    term_value: complex  # noiseless term the transmitter reconstructs


@dataclass
class TransmissionRecord:
    """Everything sent and received over the 2K-1 slots.

    ``X[t]`` is the transmit vector, ``Y[t, i]`` and ``noise[t, i]`` the
    observation and noise sample of receiver ``i``. Unfilled entries are NaN.
    """

    plan: TransmissionPlan
    channel: ChannelRealization
    power: float
    symbols: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    noise: np.ndarray
    expected_power: np.ndarray
    labels: dict = field(default_factory=dict)
    beams: dict = field(default_factory=dict)
    used_perfect: set = field(default_factory=set)
    used_delayed: set = field(default_factory=set)

    @property
    def K(self) -> int:
        return self.plan.K

    def term_value(self, term: Term) -> complex:
        """Noiseless value of an overheard term, as the transmitter rebuilds it."""
        h = self.channel.row(term.observer, term.slot)
        return complex(h @ self.X[term.slot])

    def term_variance(self, term: Term) -> float:
        h = self.channel.row(term.observer, term.slot)
        return self.power / self.K * float(np.vdot(h, h).real)


def _observe(record: TransmissionRecord, t: int, x: np.ndarray, noise_on: bool,
             noise_seed: int) -> None:
    K = record.K
    record.X[t] = x
    if noise_on:
        record.noise[t] = complex_gaussian(noise_seed, (_NOISE_STREAM, t), K)
    else:
        record.noise[t] = 0.0
    record.Y[t] = record.channel.H[t] @ x + record.noise[t]


def phase1_transmit(symbols: np.ndarray, channel: ChannelRealization, power: float,
                    noise: bool = False, seed: int = 0,
                    pattern: CsitPattern | None = None) -> TransmissionRecord:
    """Run the K phase-1 slots; slot t sends the symbols of its N user.

    Returns a record with phase-2 rows still unfilled.
    """
    symbols = np.asarray(symbols, dtype=complex)
    K = symbols.shape[0]
    if symbols.shape != (K, K):
        raise ValueError(f"symbol block must be square, got {symbols.shape}")
    if K < 2:
        raise ValueError("need K >= 2")
    if channel.K != K:
        raise ValueError(f"channel has {channel.K} users, symbols have {K}")
    if pattern is None:
        pattern = icr_pattern(K)
    plan = plan_transmission(pattern)
    n = pattern.n
    if channel.n < n:
        raise ValueError(f"channel has {channel.n} slots, pattern needs {n}")
    if power <= 0:
        raise ValueError("power must be positive")

    nan = np.full((n, K), np.nan, dtype=complex)
    record = TransmissionRecord(
        plan=plan, channel=channel, power=float(power), symbols=symbols,
        X=nan.copy(), Y=nan.copy(), noise=nan.copy(),
        expected_power=np.full(n, np.nan))
    heard = {}
    for t, owner in enumerate(plan.phase1_owner):
        x = np.sqrt(power / K) * symbols[owner]
        _observe(record, t, x, noise, seed)
        record.expected_power[t] = power
        for i in range(K):
            kind = "L" if i == owner else "I"
            heard[i, kind] = heard.get((i, kind), 0) + 1
            record.labels[(i, t)] = f"{kind}_{i + 1}^{heard[i, kind]}"
    return record


def _beam_direction(null_rows, K: int) -> tuple[int, np.ndarray]:
    Q = linalg.null_space_projector(null_rows, K)
    for column in range(K):
        try:
            return column, linalg.first_beam_column(Q, column)
        except DegenerateBeamError:
            continue
    raise DegenerateBeamError("every projector column vanished")


def phase2_beamform(record: TransmissionRecord, t: int) -> tuple[np.ndarray, list[Beam]]:
    """Transmit vector and beams for phase-2 slot ``t``.

    Each term gets an equal share of the power budget in expectation; the
    returned vector has expected squared norm equal to the record's power.
    """
    sp = record.plan.slot_plan(t)
    K = record.K
    if np.isnan(record.X[:K].real).any():
        raise MissingObservationError("phase 1 has not been run")
    H = record.channel.H
    share = record.power / len(sp.beams)
    x = np.zeros(K, dtype=complex)
    beams = []
    for bs in sp.beams:
        for j in bs.null_at:
            if record.plan.pattern.state(j, t) is not P:
                raise PatternInfeasibleError(f"user {j} lacks perfect CSIT in slot {t}")
        column, direction = _beam_direction([H[t, j] for j in bs.null_at], K)
        value = record.term_value(bs.term)
        scale = np.sqrt(share / (np.vdot(direction, direction).real
                                 * record.term_variance(bs.term)))
        beam = Beam(spec=bs, column=column, vector=scale * direction, term_value=value)
        beams.append(beam)
        x += beam.vector * value
    return x, beams


def phase2_transmit(record: TransmissionRecord, t: int, noise: bool = False,
                    seed: int = 0) -> None:
    """Send phase-2 slot ``t`` and store what every receiver observes."""
    x, beams = phase2_beamform(record, t)
    sp = record.plan.slot_plan(t)
    _observe(record, t, x, noise, seed)
    record.beams[t] = beams
    record.expected_power[t] = sum(
        np.vdot(b.vector, b.vector).real * record.term_variance(b.spec.term) for b in beams)
    for b in beams:
        record.used_delayed.add((b.spec.term.observer, b.spec.term.slot))
        record.used_perfect.update((j, t) for j in b.spec.null_at)
    for i in range(record.K):
        combos = sum(1 for s in range(t) if record.labels[i, s].startswith("L"))
        suffix = "+I" if i == sp.blind_user else ""
        record.labels[(i, t)] = f"L_{i + 1}^{combos + 1}{suffix}"


@dataclass
class Cancellation:
    value: complex
    row: np.ndarray                   # coefficients on the receiver's own symbols
    known: dict[int, complex]         # phase-1 slot -> multiplier subtracted
    noise_coeffs: dict[int, complex]  # slot -> coefficient on that slot's noise


def cancel_interference(record: TransmissionRecord, t: int, r: int | None = None) -> Cancellation:
    """Strip the already-overheard terms from the blind user's phase-2 sample.

    The user ``r`` without CSIT in slot ``t`` subtracts, for every beam that
    carries a term it overheard, the beam's gain at ``r`` times its stored
    phase-1 observation of that term.
    """
    sp = record.plan.slot_plan(t)
    if r is None:
        r = sp.blind_user
    elif r != sp.blind_user:
        raise ValueError(f"user {r} is not the blind user of slot {t}")
    if t not in record.beams:
        raise MissingObservationError(f"slot {t} has not been transmitted")
    h = record.channel.row(r, t)
    value = complex(record.Y[t, r])
    known, noise_coeffs = {}, {t: 1.0 + 0j}
    row = None
    for b in record.beams[t]:
        gain = complex(h @ b.vector)
        term = b.spec.term
        if term.observer == r:
            stored = record.Y[term.slot, r]
            if np.isnan(stored.real):
                raise MissingObservationError(
                    f"user {r} has no stored observation for slot {term.slot}")
            value -= gain * stored
            known[term.slot] = gain
            noise_coeffs[term.slot] = -gain
        else:
            row = gain * np.sqrt(record.power / record.K) * record.channel.row(term.observer, term.slot)
    return Cancellation(value=value, row=row, known=known, noise_coeffs=noise_coeffs)


# -- decoding --------------------------------------------------------------

@dataclass
class ReceiverSystem:
    """K interference-free combinations ``values = G @ s_i + noise``.

    ``noise_mix[m, t]`` is the coefficient of noise sample N_i(t) in
    combination m, so the noise covariance is ``noise_mix @ noise_mix^H``.
    """

    user: int
    G: np.ndarray
    values: np.ndarray
    sources: list[int]
    cancellation: list[dict[int, complex]]
    noise_mix: np.ndarray

    @property
    def noise_cov(self) -> np.ndarray:
        return self.noise_mix @ self.noise_mix.conj().T


@dataclass
class DecodingSystem:
    K: int
    power: float
    plan: TransmissionPlan
    channel: ChannelRealization
    receivers: list[ReceiverSystem]

    def rate(self, i: int) -> float:
        """Rate of receiver ``i`` in bits over the whole block."""
        rx = self.receivers[i]
        unit = rx.G / np.sqrt(self.power / self.K)
        return linalg.logdet_rate(unit, rx.noise_cov, self.power)

    def sum_rate(self) -> float:
        return sum(self.rate(i) for i in range(self.K))


def assemble_system(record: TransmissionRecord) -> DecodingSystem:
    plan = record.plan
    K, n = record.K, plan.pattern.n
    amp = np.sqrt(record.power / K)
    receivers = []
    for i in range(K):
        own = plan.phase1_slot(i)
        rows, values, cancels = [], [], []
        mix = np.zeros((K, n), dtype=complex)
        rows.append(amp * record.channel.row(i, own))
        values.append(record.Y[own, i])
        cancels.append({})
        mix[0, own] = 1.0
        for m, sp in enumerate(plan.phase2, start=1):
            t = sp.slot
            if sp.blind_user == i:
                c = cancel_interference(record, t, i)
                rows.append(c.row)
                values.append(c.value)
                cancels.append(c.known)
                for s, coef in c.noise_coeffs.items():
                    mix[m, s] = coef
            else:
                beam = next(b for b in record.beams[t] if b.spec.target == i)
                gain = complex(record.channel.row(i, t) @ beam.vector)
                term = beam.spec.term
                rows.append(gain * amp * record.channel.row(term.observer, term.slot))
                values.append(record.Y[t, i])
                cancels.append({})
                mix[m, t] = 1.0
        receivers.append(ReceiverSystem(
            user=i, G=np.array(rows), values=np.array(values, dtype=complex),
            sources=plan.row_sources(i), cancellation=cancels, noise_mix=mix))
    return DecodingSystem(K=K, power=record.power, plan=plan, channel=record.channel,
                          receivers=receivers)


def effective_decoding_matrix(system: DecodingSystem, i: int,
                              tol: float = PROPORTIONALITY_TOL):
    """Receiver ``i``'s matrix and, per row, the channel row it is a multiple of.

    Every row is matched against the channel rows ``H_j`` of all users in
    ``i``'s phase-1 slot. Returns ``(G, matches)`` with ``matches[m] =
    (j, c, residual)`` such that ``G[m] ~= c * H_j``.

    Raises
    ------
    StructuralViolationError
        If some row is not proportional to any of those channel rows.
    """
    rx = system.receivers[i]
    H = system.channel.H[system.plan.phase1_slot(i)]
    # c[m, j] projects row m of G onto channel row j
    c = (rx.G @ H.conj().T) / np.sum(np.abs(H) ** 2, axis=1)
    diff = rx.G[:, None, :] - c[:, :, None] * H[None, :, :]
    res = np.linalg.norm(diff, axis=2) / np.linalg.norm(rx.G, axis=1)[:, None]
    matches = []
    for m in range(rx.G.shape[0]):
        j = int(np.argmin(res[m]))
        if not res[m, j] < tol or abs(c[m, j]) <= 1e-10:
            raise StructuralViolationError(
                f"row {m} of receiver {i} matches no channel row (residual {res[m, j]:.3g})")
        matches.append((j, complex(c[m, j]), float(res[m, j])))
    return rx.G, matches


@dataclass
class TrialDiagnostics:
    K: int
    seed: int
    slots: int
    symbols: int
    min_singular_value: list[float]
    decode_max_error: float
    success: bool
    structural_ok: bool
    structural_residual: float
    failure: str | None = None

    def to_json(self) -> str:
        record = {
            "K": self.K,
            "seed": self.seed,
            "min_singular_value": [float(f"{v:.12g}") for v in self.min_singular_value],
            "decode_max_error": float(f"{self.decode_max_error:.12g}"),
            "slots": self.slots,
            "symbols": self.symbols,
            "success": self.success,
            "structural_ok": self.structural_ok,
            "structural_residual": float(f"{self.structural_residual:.12g}"),
            "failure": self.failure,
        }
        return json.dumps(record, sort_keys=True)


@dataclass
class IcrRun:
    record: TransmissionRecord
    system: DecodingSystem
    decoded: np.ndarray
    diagnostics: TrialDiagnostics


def transmit(symbols: np.ndarray, channel: ChannelRealization, power: float = 1.0,
             noise: bool = False, seed: int = 0,
             pattern: CsitPattern | None = None) -> TransmissionRecord:
    """Both phases over the pattern's 2K-1 slots."""
    record = phase1_transmit(symbols, channel, power, noise, seed, pattern)
    for sp in record.plan.phase2:
        phase2_transmit(record, sp.slot, noise, seed)
    return record


def run_icr(K: int, seed: int, power: float = 1.0, noise: bool = False,
            pattern: CsitPattern | None = None,
            symbols: np.ndarray | None = None) -> IcrRun:
    """One complete trial: sample, transmit, cancel, decode, diagnose.

    A singular receiver system is reported in the diagnostics (``success``
    false) rather than raised.
    """
    if K < 2:
        raise ValueError("need K >= 2")
    if pattern is None:
        pattern = icr_pattern(K)
    channel = sample_channel(K, pattern.n, seed)
    if symbols is None:
        symbols = random_symbols(K, seed)
    record = transmit(symbols, channel, power, noise, seed, pattern)
    system = assemble_system(record)

    decoded = np.full((K, K), np.nan, dtype=complex)
    failure = None
    min_sv = []
    for rx in system.receivers:
        min_sv.append(float(np.linalg.svd(rx.G, compute_uv=False)[-1]))
        try:
            decoded[rx.user] = linalg.solve(rx.G, rx.values)
        except SingularSystemError as exc:
            failure = f"receiver {rx.user}: {exc}"
    err = float(np.max(np.abs(decoded - symbols))) if failure is None else float("inf")

    structural_ok, worst = True, 0.0
    for i in range(K):
        try:
            _, matches = effective_decoding_matrix(system, i)
        except StructuralViolationError as exc:
            structural_ok, worst = False, float("inf")
            failure = failure or str(exc)
            break
        if [j for j, _, _ in matches] != system.receivers[i].sources:
            structural_ok = False
            failure = failure or f"receiver {i}: rows match unexpected channel rows"
        worst = max(worst, max(res for _, _, res in matches))

    diag = TrialDiagnostics(
        K=K, seed=seed, slots=pattern.n, symbols=K * K, min_singular_value=min_sv,
        decode_max_error=err,
        success=failure is None and (noise or err < DECODE_TOL),
        structural_ok=structural_ok, structural_residual=worst, failure=failure)
    return IcrRun(record=record, system=system, decoded=decoded, diagnostics=diag)
