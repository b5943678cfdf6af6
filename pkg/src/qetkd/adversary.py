"""Eavesdropper scenarios and their detection statistics.

Three adversaries against the energy-sign key protocol:

* an independent Eve who prepares her own copy of the resource state,
  measures it, and replays the broadcast feedback -- her outcomes are
  uncorrelated with the sender's, so her state and key both miss;
* a post-selecting Eve who conditions her copy on the broadcast bit
  with probability one -- the only adversary whose state reproduces the
  receiver's exactly (and the conditioning is not physically
  realizable, which is the point);
* a man-in-the-middle who replaces the shared resource state with two
  pairs (Eve-sender, Eve-receiver), destroying the correlations the
  receiver decodes from.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .protocol import MeasurementBasis, RunContext, run_ensemble, ensemble_for_state
from .rng import stream
from .spinops import expectation, trace_distance

DETECTIONS = ("none", "double_message", "verification_mismatch")
SPLIT_CASES = ("eve_waits", "eve_measures_first_silent", "eve_measures_first_sends")


@dataclass(frozen=True)
class AttackScenario:
    kind: str  # "independent" | "postselect" | "split_entanglement"
    sub_case: str | None = None

    def __post_init__(self):
        if self.kind not in ("independent", "postselect", "split_entanglement"):
            raise ValueError(f"unknown attack kind {self.kind!r}")
        if self.kind == "split_entanglement":
            if self.sub_case not in SPLIT_CASES:
                raise ValueError(f"split attack needs a sub-case from {SPLIT_CASES}")
        elif self.sub_case is not None:
            raise ValueError("sub_case only applies to split_entanglement")


@dataclass(frozen=True)
class AttackReport:
    scenario: AttackScenario
    eve_state: np.ndarray
    trace_distance_to_bob: float
    key_match_rate_alice_bob: float
    key_match_rate_eve_bob: float
    detection: str
    rounds: int
    se_alice_bob: float
    se_eve_bob: float
    joint_counts: np.ndarray  # counts over (sender bit, Eve bit)

    def to_kv(self) -> str:
        """Flat key=value block for CLI output and golden tests."""
        lines = [
            f"scenario={self.scenario.kind}",
            f"sub_case={self.scenario.sub_case or '-'}",
            f"rounds={self.rounds}",
            f"trace_distance_to_bob={self.trace_distance_to_bob:.12g}",
            f"key_match_rate_alice_bob={self.key_match_rate_alice_bob:.12g}",
            f"se_alice_bob={self.se_alice_bob:.12g}",
            f"key_match_rate_eve_bob={self.key_match_rate_eve_bob:.12g}",
            f"se_eve_bob={self.se_eve_bob:.12g}",
            f"detection={self.detection}",
        ]
        return "\n".join(lines) + "\n"


def _match_stats(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """Agreement rate and its binomial standard error."""
    n = len(a)
    rate = float(np.mean(a == b))
    se = float(np.sqrt(max(rate * (1.0 - rate), 1e-12) / n))
    return rate, se


def bob_reference_state(ctx: RunContext) -> np.ndarray:
    """Receiver's exact post-feedback ensemble state (identity encoding)."""
    dim = 2 ** ctx.n_sites
    rho_b = np.zeros((dim, dim), dtype=complex)
    for b in (0, 1):
        block = ctx.projectors[b] @ ctx.rho_gs @ ctx.projectors[b]
        u = ctx.rotations[b]
        rho_b += u @ block @ u.conj().T
    return rho_b


def _energy_table(ctx: RunContext) -> np.ndarray:
    """table[b, b'] = receiver conditional energy for outcome b, announced bit b'."""
    ident = ensemble_for_state(ctx.with_rule("identity"), ctx.rho_gs)
    flipped = ensemble_for_state(ctx.with_rule("flip"), ctx.rho_gs)
    table = np.empty((2, 2))
    for b in (0, 1):
        table[b, b] = ident.per_outcome[b][1]
        table[b, b ^ 1] = flipped.per_outcome[b][1]
    return table


def _sample_bits(p0: float, n: int, rng: np.random.Generator) -> np.ndarray:
    return (rng.random(n) >= p0).astype(np.int64)


def eve_independent(ctx: RunContext, eve_basis: MeasurementBasis | None = None,
                    rounds: int = 10_000, seed: int = 0) -> AttackReport:
    """Eve measures her own copy of the resource state and replays the feedback.

    Her measurement outcomes are independent of the sender's, so her
    reconstructed state differs from the receiver's and her decoded key
    agrees with his only at chance level.
    """
    eve_basis = eve_basis or ctx.alice
    n = ctx.n_sites
    dim = 2 ** n

    # Exact statistical state: Eve's measured ensemble, rotated by the
    # announced bit (identity encoding), weighted by the announcement odds.
    p_eve = [
        float(np.trace(
            0.5 * (np.eye(dim) - (-1.0) ** b * eve_basis.observable(n)) @ ctx.rho_gs
        ).real)
        for b in (0, 1)
    ]
    eve_measured = np.zeros((dim, dim), dtype=complex)
    for b in (0, 1):
        p_b = 0.5 * (np.eye(dim) - (-1.0) ** b * eve_basis.observable(n))
        eve_measured += p_b @ ctx.rho_gs @ p_b
    out = run_ensemble(ctx)
    rho_e = np.zeros((dim, dim), dtype=complex)
    for announced in (0, 1):
        q = out.per_outcome[announced][0]
        u = ctx.rotations[announced]
        rho_e += q * (u @ eve_measured @ u.conj().T)
    rho_b = bob_reference_state(ctx)

    # Seeded round statistics.
    table = _energy_table(ctx)
    rng = stream(seed, 1)
    logical = rng.integers(0, 2, rounds)
    b_alice = _sample_bits(out.per_outcome[0][0], rounds, rng)
    b_eve = _sample_bits(p_eve[0], rounds, rng)
    announced = b_alice ^ (logical ^ 1)  # send b for logical 1, b^1 for logical 0
    bob_energy = table[b_alice, announced]
    eve_energy = table[b_eve, announced]
    bob_key = (bob_energy < 0).astype(np.int64)
    eve_key = (eve_energy < 0).astype(np.int64)

    rate_ab, se_ab = _match_stats(logical, bob_key)
    rate_eb, se_eb = _match_stats(eve_key, bob_key)
    joint = np.zeros((2, 2))
    for ba, be in zip(b_alice, b_eve):
        joint[ba, be] += 1

    return AttackReport(
        scenario=AttackScenario("independent"),
        eve_state=rho_e,
        trace_distance_to_bob=trace_distance(rho_e, rho_b),
        key_match_rate_alice_bob=rate_ab,
        key_match_rate_eve_bob=rate_eb,
        detection="none",
        rounds=rounds,
        se_alice_bob=se_ab,
        se_eve_bob=se_eb,
        joint_counts=joint,
    )


def eve_postselect(ctx: RunContext, rounds: int = 10_000, seed: int = 0) -> AttackReport:
    """Eve conditions her copy on the broadcast bit with probability one.

    Post-selection replaces her own measurement statistics with the
    sender's, so the state she assembles is identical to the receiver's
    -- and so is every key bit she decodes from it.
    """
    dim = 2 ** ctx.n_sites
    rho_e = np.zeros((dim, dim), dtype=complex)
    for b in (0, 1):
        block = ctx.projectors[b] @ ctx.rho_gs @ ctx.projectors[b]
        u = ctx.rotations[b]
        rho_e += u @ block @ u.conj().T
    rho_b = bob_reference_state(ctx)

    out = run_ensemble(ctx)
    table = _energy_table(ctx)
    rng = stream(seed, 2)
    logical = rng.integers(0, 2, rounds)
    b_alice = _sample_bits(out.per_outcome[0][0], rounds, rng)
    announced = b_alice ^ (logical ^ 1)
    bob_key = (table[b_alice, announced] < 0).astype(np.int64)
    eve_key = bob_key.copy()  # post-selected on b_alice: identical conditioning

    rate_ab, se_ab = _match_stats(logical, bob_key)
    rate_eb, se_eb = _match_stats(eve_key, bob_key)
    joint = np.zeros((2, 2))
    for ba in b_alice:
        joint[ba, ba] += 1

    return AttackReport(
        scenario=AttackScenario("postselect"),
        eve_state=rho_e,
        trace_distance_to_bob=trace_distance(rho_e, rho_b),
        key_match_rate_alice_bob=rate_ab,
        key_match_rate_eve_bob=rate_eb,
        detection="none",
        rounds=rounds,
        se_alice_bob=se_ab,
        se_eve_bob=se_eb,
        joint_counts=joint,
    )


def split_attack(ctx: RunContext, sub_case: str, rounds: int = 10_000,
                 seed: int = 0, verification_bits: int = 64) -> AttackReport:
    """Man-in-the-middle with two resource pairs instead of one.

    The sender unknowingly runs the protocol on the Eve-sender pair, the
    receiver on the Eve-receiver pair, so his conditional energies carry
    no information about her bits.  Eve herself plays the legitimate
    receiver on her sender-side pair and decodes the key perfectly.
    """
    if sub_case not in SPLIT_CASES:
        raise ValueError(f"unknown split sub-case {sub_case!r}")
    n = ctx.n_sites
    dim = 2 ** n
    out = run_ensemble(ctx)
    p0 = out.per_outcome[0][0]
    table = _energy_table(ctx)
    ref_b = expectation(ctx.rho_gs, ctx.h_bob)

    rng = stream(seed, 3)
    logical = rng.integers(0, 2, rounds)
    b_alice = _sample_bits(p0, rounds, rng)   # sender's outcomes on the EA pair
    announced = b_alice ^ (logical ^ 1)

    if sub_case == "eve_waits":
        # Receiver rotates an unmeasured pair: no projection ever happened.
        energy_by_bit = np.array([
            expectation(ctx.rotations[a] @ ctx.rho_gs @ ctx.rotations[a].conj().T,
                        ctx.h_bob) - ref_b
            for a in (0, 1)
        ])
        bob_energy = energy_by_bit[announced]
        rho_eb = np.zeros((dim, dim), dtype=complex)
        for a in (0, 1):
            q = float(np.mean(announced == a))
            rho_eb += q * (ctx.rotations[a] @ ctx.rho_gs @ ctx.rotations[a].conj().T)
        b_eve = np.full(rounds, -1, dtype=np.int64)  # never measured
        detection = "verification_mismatch"
    else:
        b_eve = _sample_bits(p0, rounds, rng)  # Eve's outcomes on the EB pair
        used_bit = b_eve if sub_case == "eve_measures_first_sends" else announced
        bob_energy = table[b_eve, used_bit]
        rho_eb = np.zeros((dim, dim), dtype=complex)
        for be in (0, 1):
            for a in (0, 1):
                q = float(np.mean((b_eve == be) & (used_bit == a)))
                block = ctx.projectors[be] @ ctx.rho_gs @ ctx.projectors[be]
                prob = float(np.trace(block).real)
                if prob > 1e-14 and q > 0:
                    u = ctx.rotations[a]
                    rho_eb += q * (u @ block @ u.conj().T) / prob
        detection = ("double_message" if sub_case == "eve_measures_first_sends"
                     else "verification_mismatch")

    bob_key = (bob_energy < 0).astype(np.int64)
    # Eve decodes from her side of the sender pair, where she is the
    # legitimate receiver of the teleported energy.
    eve_energy = table[b_alice, announced]
    eve_key = (eve_energy < 0).astype(np.int64)

    rate_ab, se_ab = _match_stats(logical, bob_key)
    rate_eb, se_eb = _match_stats(eve_key, bob_key)

    if detection == "verification_mismatch":
        compared = min(verification_bits, rounds)
        if compared and np.all(logical[:compared] == bob_key[:compared]):
            detection = "none"  # verification happened to pass

    joint = np.zeros((2, 2))
    for ba, be in zip(b_alice, np.maximum(b_eve, 0)):
        joint[ba, be] += 1

    return AttackReport(
        scenario=AttackScenario("split_entanglement", sub_case),
        eve_state=rho_eb,
        trace_distance_to_bob=trace_distance(rho_eb, bob_reference_state(ctx)),
        key_match_rate_alice_bob=rate_ab,
        key_match_rate_eve_bob=rate_eb,
        detection=detection,
        rounds=rounds,
        se_alice_bob=se_ab,
        se_eve_bob=se_eb,
        joint_counts=joint,
    )


def mutual_information_bits(joint_counts: np.ndarray) -> float:
    """Plug-in mutual information (bits) of a 2x2 contingency table."""
    total = joint_counts.sum()
    if total == 0:
        return 0.0
    p = joint_counts / total
    px = p.sum(axis=1)
    py = p.sum(axis=0)
    mi = 0.0
    for i in (0, 1):
        for j in (0, 1):
            if p[i, j] > 0:
                mi += p[i, j] * np.log2(p[i, j] / (px[i] * py[j]))
    return float(mi)
