"""Brute-force thermal-state moments over a truncated multimode Fock basis.

The chaotic state is diagonal in the multimode number basis: each mode k
carries independent geometric weights

    P_k(n) = <n_k>^n / (1 + <n_k>)^(n + 1)

and the joint weight of an occupation tuple is the product over modes.  No
density matrix is ever materialized; normal-ordered ladder monomials are
evaluated by acting directly on occupation tuples (a|n> = sqrt(n)|n-1>,
a'|n> = sqrt(n+1)|n+1>) and keeping the terms that return to the starting
basis state.  Everything here is exact up to the geometric truncation tail,
which is computable and asserted.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

DEFAULT_BASIS_CAP = 10**6

# ladder operator kinds
_CREATE = "a+"
_ANNIHILATE = "a"


class BasisSizeError(RuntimeError):
    """Truncated basis would exceed the configured enumeration cap."""


@dataclass(frozen=True)
class ThermalState:
    """Multimode thermal state given by its per-mode mean occupations.

    mode_means are the <n_k> (dimensionless, >= 0); n_max is the truncation
    occupancy applied to every mode.
    """

    mode_means: tuple[float, ...]
    n_max: int

    def __post_init__(self):
        means = tuple(float(m) for m in self.mode_means)
        object.__setattr__(self, "mode_means", means)
        if len(means) < 1:
            raise ValueError("at least one mode is required")
        if any(not (math.isfinite(m) and m >= 0.0) for m in means):
            raise ValueError("mode means must be finite and nonnegative")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")

    @property
    def n_modes(self) -> int:
        return len(self.mode_means)

    @property
    def basis_size(self) -> int:
        return (self.n_max + 1) ** self.n_modes

    def tail_bound(self) -> float:
        """Upper bound on 1 - Tr(rho) after truncation at n_max.

        Per mode the discarded weight is exactly (m/(1+m))^(n_max+1); the
        union bound sums them.
        """
        return sum(
            (m / (1.0 + m)) ** (self.n_max + 1) if m > 0 else 0.0
            for m in self.mode_means
        )

    def mode_weights(self, k: int) -> list[float]:
        """Truncated geometric weights P(n), n = 0..n_max, for mode k."""
        m = self.mode_means[k]
        if m == 0.0:
            return [1.0] + [0.0] * self.n_max
        return [m**n / (1.0 + m) ** (n + 1) for n in range(self.n_max + 1)]

    @staticmethod
    def default_n_max(mean: float) -> int:
        """Truncation heuristic used when no explicit n_max is given."""
        return max(20, math.ceil(10.0 * mean + 10.0))


def _check_mode(state: ThermalState, k: int) -> None:
    if not (0 <= k < state.n_modes):
        raise IndexError(f"mode index {k} out of range [0, {state.n_modes})")


def state_weights(
    state: ThermalState, basis_cap: int = DEFAULT_BASIS_CAP
) -> dict[tuple[int, ...], float]:
    """Joint weights over the truncated occupation basis.

    Raises BasisSizeError if (n_max+1)^n_modes exceeds basis_cap.  The
    returned weights are nonnegative and sum to Tr(rho), which differs from 1
    by at most the state's geometric tail bound (asserted).
    """
    if state.basis_size > basis_cap:
        raise BasisSizeError(
            f"basis size {state.basis_size} exceeds cap {basis_cap}"
        )
    per_mode = [state.mode_weights(k) for k in range(state.n_modes)]
    weights: dict[tuple[int, ...], float] = {}
    for occ in itertools.product(range(state.n_max + 1), repeat=state.n_modes):
        w = 1.0
        for k, n in enumerate(occ):
            w *= per_mode[k][n]
        weights[occ] = w
    total = math.fsum(weights.values())
    assert 1.0 - total <= state.tail_bound() + 1e-12, "trace below tail bound"
    return weights


def _matrix_element(occ: tuple[int, ...], ops: list[tuple[str, int]]) -> float:
    """<occ| op_1 ... op_m |occ> for a product of ladder operators.

    Operators are listed left to right as written and applied to the ket in
    reverse.  Occupations may transiently exceed n_max; such paths cannot
    return to |occ> for the normal-ordered products used here, so the
    truncated and untruncated conventions agree.
    """
    current = list(occ)
    amp = 1.0
    for kind, mode in reversed(ops):
        n = current[mode]
        if kind == _ANNIHILATE:
            if n == 0:
                return 0.0
            amp *= math.sqrt(n)
            current[mode] = n - 1
        else:
            amp *= math.sqrt(n + 1)
            current[mode] = n + 1
    return amp if tuple(current) == occ else 0.0


def _expectation(
    state: ThermalState, ops: list[tuple[str, int]], basis_cap: int
) -> float:
    weights = state_weights(state, basis_cap)
    return math.fsum(
        w * _matrix_element(occ, ops) for occ, w in weights.items() if w != 0.0
    )


def second_moment(
    state: ThermalState, k: int, kp: int, basis_cap: int = DEFAULT_BASIS_CAP
) -> float:
    """Tr[rho a'_k a_kp] by explicit sum over the truncated basis.

    Equals <n_k> delta_{k,kp} up to the truncation tail; exactly zero for
    k != kp (number-basis orthogonality).
    """
    _check_mode(state, k)
    _check_mode(state, kp)
    return _expectation(state, [(_CREATE, k), (_ANNIHILATE, kp)], basis_cap)


def fourth_moment(
    state: ThermalState,
    k: int,
    kp: int,
    kpp: int,
    kppp: int,
    basis_cap: int = DEFAULT_BASIS_CAP,
) -> float:
    """Tr[rho a'_k a'_kp a_kpp a_kppp] by brute force.

    For equal mode means <n> this matches
    <n>^2 (delta_{k,kpp} delta_{kp,kppp} + delta_{k,kppp} delta_{kp,kpp})
    up to the truncation tail, including the all-equal-index case where the
    exact thermal value <n(n-1)> = 2<n>^2 coincides with the two-delta sum.
    """
    for idx in (k, kp, kpp, kppp):
        _check_mode(state, idx)
    ops = [(_CREATE, k), (_CREATE, kp), (_ANNIHILATE, kpp), (_ANNIHILATE, kppp)]
    return _expectation(state, ops, basis_cap)


def g2_zero_delay_single_mode(
    state: ThermalState, k: int, basis_cap: int = DEFAULT_BASIS_CAP
) -> float:
    """Tr[rho a'a'aa] / Tr[rho a'a]^2 for mode k; 2 for thermal statistics."""
    _check_mode(state, k)
    if state.mode_means[k] <= 0.0:
        raise ValueError("g2 is undefined for zero mean occupation")
    num = fourth_moment(state, k, k, k, k, basis_cap)
    den = second_moment(state, k, k, basis_cap)
    return num / (den * den)


def two_delta_fourth_moment(mean: float, k: int, kp: int, kpp: int, kppp: int) -> float:
    """Closed-form two-delta prediction for equal mode means."""
    return mean * mean * (
        (1.0 if (k == kpp and kp == kppp) else 0.0)
        + (1.0 if (k == kppp and kp == kpp) else 0.0)
    )
