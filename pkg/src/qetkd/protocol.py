"""Protocol kernel: measurement, conditioned rotation, optimal angle.

One round of the energy-teleportation protocol on a resource ground
state |gs> of a partitioned Hamiltonian:

1. the sender projects her site with P(b) = (1 - (-1)^b n.sigma) / 2 and
   announces the outcome bit (possibly remapped by the encoding rule);
2. the receiver applies U(b') = exp(-i theta (-1)^{b'} m.sigma) on his
   site;
3. energies are read off as Tr[rho H_part] - Tr[rho_in H_part], i.e. as
   deviations from the pre-measurement state.

The rotation angle comes from the ground-state parameters

    xi  = <gs| sB H sB |gs>          (H shifted to zero ground energy)
    eta = <gs| sA . i [sB, H] |gs>

via cos(2 theta) = xi / sqrt(xi^2 + eta^2) and sin(2 theta) = eta / ...,
which minimizes the receiver's ensemble energy to (xi - sqrt(xi^2 +
eta^2)) / 2.  All evolution is exact at the density-matrix level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateGroundError,
    DegenerateObjectiveError,
    ImaginaryResidueError,
    PartitionViolationError,
)
from .models import ALICE, BOB, HamiltonianSpec, Partition, PartitionPart
from .rng import stream
from .spinops import (
    AXES,
    commutator,
    eigendecompose,
    expectation,
    frobenius,
    pauli_on_site,
    pure_density,
    require_unit_vector,
    vector_observable,
)
from .tolerances import TOL


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeasurementBasis:
    """Projective measurement direction n.sigma at one site."""

    site: int
    vector: tuple[float, float, float]

    def __post_init__(self):
        require_unit_vector(np.asarray(self.vector, dtype=float))

    @classmethod
    def x(cls, site: int) -> "MeasurementBasis":
        return cls(site, (1.0, 0.0, 0.0))

    @classmethod
    def y(cls, site: int) -> "MeasurementBasis":
        return cls(site, (0.0, 1.0, 0.0))

    @classmethod
    def z(cls, site: int) -> "MeasurementBasis":
        return cls(site, (0.0, 0.0, 1.0))

    @classmethod
    def haar_random(cls, site: int, rng: np.random.Generator) -> "MeasurementBasis":
        """Uniform direction on the 2-sphere (normalized 3-d Gaussian)."""
        v = rng.normal(size=3)
        v /= np.linalg.norm(v)
        return cls(site, tuple(float(c) for c in v))

    def observable(self, n_sites: int) -> np.ndarray:
        return vector_observable(np.asarray(self.vector), self.site, n_sites)


def projector(basis: MeasurementBasis, b: int, n_sites: int) -> np.ndarray:
    """P(b) = (1 - (-1)^b n.sigma) / 2."""
    if b not in (0, 1):
        raise ValueError(f"outcome bit must be 0 or 1, got {b}")
    dim = 2 ** n_sites
    return 0.5 * (np.eye(dim) - (-1.0) ** b * basis.observable(n_sites))


@dataclass(frozen=True)
class ThetaParams:
    """Ground-state parameters fixing the feedback angle."""

    xi: float
    eta: float
    theta: float

    @property
    def magnitude(self) -> float:
        return math.hypot(self.xi, self.eta)

    def optimal_energy(self) -> float:
        """Receiver's ensemble energy at the optimal angle: (xi - |.|) / 2."""
        return 0.5 * (self.xi - self.magnitude)


@dataclass(frozen=True)
class FeedbackRule:
    """Receiver rotation U(b') = exp(-i theta (-1)^{b'} m.sigma).

    ``bit_map`` is the sender-side encoding applied to the measured bit
    before it is announced: "identity" transmits b, "flip" transmits
    b xor 1.
    """

    site: int
    vector: tuple[float, float, float]
    theta: float
    bit_map: str = "identity"

    def __post_init__(self):
        require_unit_vector(np.asarray(self.vector, dtype=float))
        if self.bit_map not in ("identity", "flip"):
            raise ValueError(f"unknown bit map {self.bit_map!r}")

    def mapped(self, b: int) -> int:
        return b ^ 1 if self.bit_map == "flip" else b

    def observable(self, n_sites: int) -> np.ndarray:
        return vector_observable(np.asarray(self.vector), self.site, n_sites)

    def rotation(self, announced: int, n_sites: int) -> np.ndarray:
        """Rotation for a given announced bit; (m.sigma)^2 = 1 keeps it closed-form."""
        sb = self.observable(n_sites)
        sign = (-1.0) ** announced
        dim = 2 ** n_sites
        return math.cos(self.theta) * np.eye(dim) - 1j * sign * math.sin(self.theta) * sb

    def unitary(self, outcome: int, n_sites: int) -> np.ndarray:
        """Rotation the receiver applies when the sender measured ``outcome``."""
        return self.rotation(self.mapped(outcome), n_sites)


@dataclass(frozen=True)
class QetOutcome:
    """Ensemble energies plus the per-outcome breakdown."""

    e_alice: float
    e_bob: float
    per_outcome: dict[int, tuple[float, float]]  # b -> (probability, energy)

    def probabilities(self) -> tuple[float, float]:
        return self.per_outcome[0][0], self.per_outcome[1][0]


@dataclass(frozen=True)
class RoundRecord:
    outcome: int
    transmitted: int
    energy: float
    decoded: int  # 1 for negative receiver energy, 0 otherwise


# ---------------------------------------------------------------------------
# ground state and angle parameters
# ---------------------------------------------------------------------------

def ground_state(spec: HamiltonianSpec) -> tuple[np.ndarray, float]:
    """Unique ground state with the largest amplitude rotated real positive.

    Raises DegenerateGroundError when the lowest level is degenerate
    (for the chain and star families this happens in the infinite-
    coupling limit; reduce the coupling).
    """
    evals, evecs = eigendecompose(spec.matrix())
    # Scale-aware: an eigensolver resolves gaps only relative to ||H||.
    scale = max(1.0, float(np.abs(evals).max()))
    if evals[1] - evals[0] <= TOL.degenerate_gap * scale:
        raise DegenerateGroundError(
            f"ground level of {spec.name} is degenerate "
            f"(gap {evals[1] - evals[0]:.3e})"
        )
    gs = evecs[:, 0].copy()
    pivot = int(np.argmax(np.abs(gs)))
    phase = gs[pivot] / abs(gs[pivot])
    gs = gs * phase.conjugate()
    return gs, float(evals[0])


def validate_partition(basis: MeasurementBasis, part_b: np.ndarray,
                       n_sites: int) -> float:
    """Frobenius norm of [P(b), H_B]; anything above tolerance breaks the protocol."""
    defect = 0.0
    for b in (0, 1):
        defect = max(defect, frobenius(commutator(projector(basis, b, n_sites), part_b)))
    return defect


def theta_params(gs: np.ndarray, h_full: np.ndarray, sigma_a: np.ndarray,
                 sigma_b: np.ndarray) -> ThetaParams:
    """xi, eta and the principal-branch angle for one sender/receiver pair."""
    dim = h_full.shape[0]
    h_shifted = h_full - expectation(gs, h_full) * np.eye(dim)
    xi = expectation(gs, sigma_b @ h_shifted @ sigma_b)
    if xi < -TOL.psd:
        raise ValueError(f"xi = {xi:.3e} is negative; shifted Hamiltonian not PSD")
    eta_op = sigma_a @ (1j * commutator(sigma_b, h_shifted))
    raw = complex(gs.conj() @ eta_op @ gs)
    if abs(raw.imag) > TOL.imaginary_residue:
        raise ImaginaryResidueError(
            f"eta has imaginary residue {raw.imag:.3e}; unsupported operator pair"
        )
    eta = raw.real
    theta = 0.5 * math.atan2(eta, xi)
    return ThetaParams(xi=xi, eta=eta, theta=theta)


def optimize_bob_basis(gs: np.ndarray, spec: HamiltonianSpec,
                       sigma_a: np.ndarray, bob_site: int,
                       ) -> tuple[np.ndarray, ThetaParams]:
    """Feedback axis maximizing eta.

    eta is linear in the axis vector, eta(m) = sum_i m_i <gs| sA . i
    [sigma_i, H] |gs>, so the maximizer is the normalized coefficient
    vector.  Raises DegenerateObjectiveError when every coefficient
    vanishes (no energy can be teleported for this sender basis).
    """
    h_full = spec.matrix()
    coeffs = np.zeros(3)
    for i, axis in enumerate(AXES):
        sb = pauli_on_site(axis, bob_site, spec.n_sites)
        raw = complex(gs.conj() @ (sigma_a @ (1j * commutator(sb, h_full))) @ gs)
        if abs(raw.imag) > TOL.imaginary_residue:
            raise ImaginaryResidueError(
                f"axis coefficient for {axis} has imaginary residue {raw.imag:.3e}"
            )
        coeffs[i] = raw.real
    norm = float(np.linalg.norm(coeffs))
    if norm < TOL.objective:
        raise DegenerateObjectiveError(
            "feedback objective vanishes for this sender basis; resample"
        )
    m = coeffs / norm
    sigma_b = vector_observable(m, bob_site, spec.n_sites)
    return m, theta_params(gs, h_full, sigma_a, sigma_b)


def paired_feedback_axis(alice: MeasurementBasis, bob_site: int) -> MeasurementBasis:
    """Fixed sender->receiver axis pairing: X -> Y and Y -> X."""
    v = np.asarray(alice.vector)
    if np.allclose(v, (1.0, 0.0, 0.0), atol=1e-12):
        return MeasurementBasis.y(bob_site)
    if np.allclose(v, (0.0, 1.0, 0.0), atol=1e-12):
        return MeasurementBasis.x(bob_site)
    raise ValueError("fixed pairing only covers the X and Y sender bases")


# ---------------------------------------------------------------------------
# prepared protocol context
# ---------------------------------------------------------------------------

def _receiver_site(part: PartitionPart) -> int:
    sites = {t.factors[0][0] for t in part.terms if len(t.factors) == 1}
    if len(sites) != 1:
        raise ValueError("cannot infer the receiver site from the partition part")
    return sites.pop()


@dataclass(frozen=True)
class RunContext:
    """Everything one protocol configuration needs, precomputed."""

    spec: HamiltonianSpec
    partition: Partition
    alice: MeasurementBasis
    rule: FeedbackRule
    theta: ThetaParams
    alice_label: str
    bob_label: str
    gs: np.ndarray = field(repr=False)
    gs_energy: float = 0.0
    rho_gs: np.ndarray = field(repr=False, default=None)
    h_full: np.ndarray = field(repr=False, default=None)
    h_alice: np.ndarray = field(repr=False, default=None)
    h_bob: np.ndarray = field(repr=False, default=None)
    projectors: tuple[np.ndarray, np.ndarray] = field(repr=False, default=None)
    rotations: tuple[np.ndarray, np.ndarray] = field(repr=False, default=None)

    @property
    def n_sites(self) -> int:
        return self.spec.n_sites

    def with_rule(self, bit_map: str) -> "RunContext":
        """Same configuration with the other sender-side encoding."""
        rule = FeedbackRule(self.rule.site, self.rule.vector, self.rule.theta, bit_map)
        return RunContext(
            spec=self.spec, partition=self.partition, alice=self.alice, rule=rule,
            theta=self.theta, alice_label=self.alice_label, bob_label=self.bob_label,
            gs=self.gs, gs_energy=self.gs_energy, rho_gs=self.rho_gs,
            h_full=self.h_full, h_alice=self.h_alice, h_bob=self.h_bob,
            projectors=self.projectors, rotations=self.rotations,
        )


def prepare(spec: HamiltonianSpec, partition: Partition,
            alice: MeasurementBasis, *,
            alice_label: str = ALICE, bob_label: str = BOB,
            bob_axis: MeasurementBasis | str = "paired",
            bit_map: str = "identity",
            theta_override: float | None = None) -> RunContext:
    """Resolve the receiver axis and angle, validate commutation, cache matrices.

    ``bob_axis`` may be an explicit MeasurementBasis, "paired" (X->Y,
    Y->X, anything else falls back to the optimizer) or "optimal".
    """
    n = spec.n_sites
    gs, energy = ground_state(spec)
    h_full = spec.matrix()
    bob_part = partition.parts[bob_label]
    h_bob = bob_part.bare_matrix(n)
    defect = validate_partition(alice, h_bob, n)
    if defect > TOL.commutator:
        raise PartitionViolationError(defect)
    bob_site = _receiver_site(bob_part)
    sigma_a = alice.observable(n)

    if isinstance(bob_axis, MeasurementBasis):
        if bob_axis.site != bob_site:
            raise ValueError(
                f"feedback axis sits on site {bob_axis.site}, "
                f"but the receiver part lives on site {bob_site}"
            )
        tp = theta_params(gs, h_full, sigma_a, bob_axis.observable(n))
        axis_vec = bob_axis.vector
    elif bob_axis == "optimal":
        m, tp = optimize_bob_basis(gs, spec, sigma_a, bob_site)
        axis_vec = tuple(float(c) for c in m)
    elif bob_axis == "paired":
        try:
            paired = paired_feedback_axis(alice, bob_site)
            tp = theta_params(gs, h_full, sigma_a, paired.observable(n))
            axis_vec = paired.vector
        except ValueError:
            m, tp = optimize_bob_basis(gs, spec, sigma_a, bob_site)
            axis_vec = tuple(float(c) for c in m)
    else:
        raise ValueError(f"unknown bob_axis {bob_axis!r}")

    theta = tp.theta if theta_override is None else float(theta_override)
    rule = FeedbackRule(bob_site, axis_vec, theta, bit_map)
    return RunContext(
        spec=spec, partition=partition, alice=alice, rule=rule, theta=tp,
        alice_label=alice_label, bob_label=bob_label,
        gs=gs, gs_energy=energy, rho_gs=pure_density(gs),
        h_full=h_full,
        h_alice=partition.parts[alice_label].bare_matrix(n),
        h_bob=h_bob,
        projectors=(projector(alice, 0, n), projector(alice, 1, n)),
        rotations=(rule.rotation(0, n), rule.rotation(1, n)),
    )


# ---------------------------------------------------------------------------
# exact ensemble evolution
# ---------------------------------------------------------------------------

def ensemble_for_state(ctx: RunContext, rho_in: np.ndarray,
                       flip_probability: float = 0.0) -> QetOutcome:
    """Run the protocol on an arbitrary input state.

    Energies are referenced to rho_in itself, so noisy inputs report the
    protocol-induced change only.  ``flip_probability`` is the chance
    that the receiver acts on the wrong classical bit.
    """
    ref_a = expectation(rho_in, ctx.h_alice)
    ref_b = expectation(rho_in, ctx.h_bob)
    e_a = 0.0
    e_b = 0.0
    per: dict[int, tuple[float, float]] = {}
    for b in (0, 1):
        p_b = ctx.projectors[b]
        block = p_b @ rho_in @ p_b
        prob = float(np.trace(block).real)
        e_a += float(np.trace(block @ ctx.h_alice).real)
        announced = ctx.rule.mapped(b)
        u_good = ctx.rotations[announced]
        fed = u_good @ block @ u_good.conj().T
        if flip_probability > 0.0:
            u_bad = ctx.rotations[announced ^ 1]
            fed = (1.0 - flip_probability) * fed \
                + flip_probability * (u_bad @ block @ u_bad.conj().T)
        energy = float(np.trace(fed @ ctx.h_bob).real)
        e_b += energy
        per[b] = (prob, energy / prob - ref_b if prob > 1e-14 else 0.0)
    return QetOutcome(e_alice=e_a - ref_a, e_bob=e_b - ref_b, per_outcome=per)


def run_ensemble(ctx: RunContext) -> QetOutcome:
    """Exact ensemble energies on the resource ground state."""
    return ensemble_for_state(ctx, ctx.rho_gs)


def run_ensemble_random_basis(spec: HamiltonianSpec, partition: Partition,
                              weighted_bases: list[tuple[MeasurementBasis, float]],
                              *, bob_axis: MeasurementBasis | str = "paired",
                              bit_map: str = "identity",
                              alice_label: str = ALICE,
                              bob_label: str = BOB) -> QetOutcome:
    """Weight-averaged outcome over a set of sender bases.

    Each basis is paired with its own receiver axis and angle; by
    linearity of the trace the result is the weighted mean of the
    per-basis outcomes.
    """
    weights = [w for _, w in weighted_bases]
    if abs(sum(weights) - 1.0) > 1e-12:
        raise ValueError(f"weights must sum to 1, got {sum(weights)}")
    e_a = e_b = 0.0
    prob = {0: 0.0, 1: 0.0}
    mean_energy = {0: 0.0, 1: 0.0}
    for basis, w in weighted_bases:
        if w == 0.0:
            continue
        ctx = prepare(spec, partition, basis, bob_axis=bob_axis, bit_map=bit_map,
                      alice_label=alice_label, bob_label=bob_label)
        out = run_ensemble(ctx)
        e_a += w * out.e_alice
        e_b += w * out.e_bob
        for b in (0, 1):
            p, e = out.per_outcome[b]
            prob[b] += w * p
            mean_energy[b] += w * p * e
    per = {
        b: (prob[b], mean_energy[b] / prob[b] if prob[b] > 1e-14 else 0.0)
        for b in (0, 1)
    }
    return QetOutcome(e_alice=e_a, e_bob=e_b, per_outcome=per)


# ---------------------------------------------------------------------------
# sampled rounds
# ---------------------------------------------------------------------------

def run_round(ctx: RunContext, seed: int) -> RoundRecord:
    """Sample one protocol round; identical seeds give identical records."""
    bits, energies = run_rounds(ctx, 1, seed)
    b = int(bits[0])
    energy = float(energies[0])
    return RoundRecord(
        outcome=b,
        transmitted=ctx.rule.mapped(b),
        energy=energy,
        decoded=1 if energy < 0.0 else 0,
    )


def run_rounds(ctx: RunContext, n_rounds: int, seed: int,
               stream_index: int = 0,
               shot_noise: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized sampling of many rounds: outcome bits and conditional energies.

    The default records the exact conditional expectation each round.
    With ``shot_noise`` the receiver instead projectively samples an
    eigenvalue of his part; the mean is unchanged but single rounds
    scatter over the spectrum.
    """
    out = run_ensemble(ctx)
    p0 = out.per_outcome[0][0]
    rng = stream(seed, stream_index)
    bits = (rng.random(n_rounds) >= p0).astype(np.int64)
    if not shot_noise:
        table = np.array([out.per_outcome[0][1], out.per_outcome[1][1]])
        return bits, table[bits]

    evals, evecs = eigendecompose(ctx.h_bob)
    ref = expectation(ctx.rho_gs, ctx.h_bob)
    weights = []
    for b in (0, 1):
        block = ctx.projectors[b] @ ctx.rho_gs @ ctx.projectors[b]
        prob = float(np.trace(block).real)
        u = ctx.rotations[ctx.rule.mapped(b)]
        fed = u @ block @ u.conj().T / prob
        w = np.real(np.einsum("ij,jk,ki->i", evecs.conj().T, fed, evecs))
        weights.append(np.clip(w, 0.0, None) / np.clip(w, 0.0, None).sum())
    energies = np.empty(n_rounds)
    for b in (0, 1):
        mask = bits == b
        count = int(mask.sum())
        if count:
            idx = rng.choice(len(evals), size=count, p=weights[b])
            energies[mask] = evals[idx] - ref
    return bits, energies
