"""Quantum channels: Kraus sets, Pauli transfer matrices, diagonal forms.

Three interchangeable representations are provided:

* :class:`KrausChannel` -- explicit operator-sum form; also carries the
  probability vector over Pauli strings when the channel is a random
  Pauli map, which unlocks the fast diagonal paths below.
* :class:`PauliDiagonalChannel` -- probability vector beta over Pauli
  strings and/or the diagonal transfer-matrix entries lambda.
* :class:`PTM` -- the full d^2 x d^2 real transfer matrix with entries
  Tr[P_j Phi(P_q)]/d.

Conversions are explicit and cached per instance.  Diagonal entries of a
Pauli channel are computed from the commutation signs between Pauli
strings (lambda_j = sum_m beta_m * s(m, j)) instead of matrix traces,
which keeps the cost per entry linear in the number of weights.

Channel families:

* ``correlated_pauli_channel`` -- per-qubit error distribution chained by
  a Markov rule with correlation parameter mu in [0, 1] (mu=0 memoryless,
  mu=1 full memory).
* ``bit_flip_channel`` / ``depolarizing_channel`` / ``dephasing_channel``
  -- standard single-parameter marginals fed into the correlated family.
* ``correlated_amplitude_damping`` -- two-qubit non-Pauli channel mixing
  independent per-qubit damping with a collective damping term.

Dense full transfer matrices are capped at MAX_QUBITS_FULL_PTM qubits;
diagonal-only computations extend to pauli.MAX_QUBITS.
"""

from __future__ import annotations

import threading
from typing import Mapping, Sequence, Union

import numpy as np

from .exceptions import (
    ConfigError,
    DimensionMismatch,
    InvalidCorrelation,
    InvalidProbability,
    NotPauliDiagonal,
    NotTracePreserving,
    ResourceCapExceeded,
)
from .pauli import (
    MAX_QUBITS,
    PauliIndex,
    _transform_per_qubit,
    devectorize,
    num_qubits,
    pauli_element,
    vectorize,
)

__all__ = [
    "MAX_QUBITS_FULL_PTM",
    "KrausChannel",
    "PauliDiagonalChannel",
    "PTM",
    "Channel",
    "ptm_from_kraus",
    "apply_channel",
    "adjoint_ptm",
    "compose",
    "ptm_power",
    "correlated_pauli_weights",
    "correlated_pauli_channel",
    "bit_flip_channel",
    "depolarizing_channel",
    "dephasing_channel",
    "correlated_amplitude_damping",
    "channel_from_config",
    "diagonal_channel",
    "as_ptm",
    "CHANNEL_FAMILIES",
]

# Full d^2 x d^2 transfer matrices above this cap are memory-prohibitive.
MAX_QUBITS_FULL_PTM = 5

TP_TOL = 1e-10
DIAGONAL_TOL = 1e-12
PTM_IMAG_TOL = 1e-10
WEIGHT_SUM_TOL = 1e-12

# s1[a, b] = +1 when single-qubit sigma_a and sigma_b commute, -1 otherwise.
_COMMUTATION_SIGNS = np.array(
    [
        [1, 1, 1, 1],
        [1, 1, -1, -1],
        [1, -1, 1, -1],
        [1, -1, -1, 1],
    ],
    dtype=float,
)


def _check_full_ptm_cap(n: int) -> None:
    if n > MAX_QUBITS_FULL_PTM:
        raise ResourceCapExceeded(
            f"full transfer matrices are capped at n={MAX_QUBITS_FULL_PTM}, got n={n}"
        )


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


def _validate_probability_vector(p, size: int, what: str) -> np.ndarray:
    """Check shape, nonnegativity and normalization, then renormalize the
    (at most 1e-9) rounding slack away so downstream invariants hold to
    machine precision."""
    p = np.asarray(p, dtype=float)
    if p.shape != (size,):
        raise InvalidProbability(f"{what} must have length {size}, got shape {p.shape}")
    if np.min(p) < -1e-12:
        raise InvalidProbability(f"{what} has negative entries (min {float(np.min(p))!r})")
    if abs(p.sum() - 1.0) > 1e-9:
        raise InvalidProbability(f"{what} must sum to 1, got {float(p.sum())!r}")
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def lambdas_from_weights(weights: np.ndarray, n: int) -> np.ndarray:
    """Diagonal transfer-matrix entries of a Pauli channel with the given
    Pauli-string probabilities, via per-qubit commutation signs."""
    return _transform_per_qubit(_COMMUTATION_SIGNS, np.asarray(weights, float), n)


class PTM:
    """Real transfer matrix of a linear map in the Pauli basis.

    ``require_tp_row=True`` (the default for channel construction) checks
    the trace-preservation signature: first row equal to (1, 0, ..., 0).
    Adjoint matrices of non-unital channels legitimately violate it, so
    derived matrices are built with the check disabled.
    """

    def __init__(self, n: int, matrix, *, require_tp_row: bool = True):
        self.n = int(n)
        _check_full_ptm_cap(self.n)
        M = np.asarray(matrix)
        dim = 4**self.n
        if M.shape != (dim, dim):
            raise DimensionMismatch(f"expected shape ({dim}, {dim}), got {M.shape}")
        if np.iscomplexobj(M):
            resid = float(np.max(np.abs(M.imag)))
            if resid >= PTM_IMAG_TOL:
                raise NotTracePreserving(
                    f"transfer matrix has imaginary residue {resid:.3e}"
                )
            M = M.real
        if require_tp_row:
            first = np.zeros(dim)
            first[0] = 1.0
            if np.max(np.abs(M[0] - first)) > 1e-9:
                raise NotTracePreserving("first row of the transfer matrix is not (1, 0, ..., 0)")
        self.matrix = _readonly(M.astype(float))

    @property
    def d(self) -> int:
        return 2**self.n

    def is_diagonal(self, tol: float = DIAGONAL_TOL) -> bool:
        off = self.matrix - np.diag(np.diag(self.matrix))
        return bool(np.max(np.abs(off)) <= tol)

    def diagonal(self) -> np.ndarray:
        return np.diag(self.matrix).copy()

    def is_unital(self, tol: float = 1e-9) -> bool:
        first_col = np.zeros(4**self.n)
        first_col[0] = 1.0
        return bool(np.max(np.abs(self.matrix[:, 0] - first_col)) <= tol)

    def __repr__(self) -> str:
        return f"PTM(n={self.n}, shape={self.matrix.shape})"


class KrausChannel:
    """Channel in operator-sum form: rho -> sum_i K_i rho K_i^dag.

    When the channel is a random Pauli map, construct it through
    :meth:`from_pauli_weights` (or the family helpers); the weight vector
    is then available as ``pauli_weights`` and the Kraus operators
    sqrt(w_k) P_k are materialized lazily on first access.
    """

    def __init__(self, kraus_ops: Sequence[np.ndarray], *, check_tp: bool = True):
        ops = [np.asarray(K, dtype=complex) for K in kraus_ops]
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        self.n = num_qubits(ops[0])
        for K in ops:
            if K.shape != ops[0].shape:
                raise DimensionMismatch("Kraus operators must share one shape")
        if check_tp:
            acc = sum(K.conj().T @ K for K in ops)
            if np.max(np.abs(acc - np.eye(self.d))) > TP_TOL:
                raise NotTracePreserving(
                    f"sum K^dag K deviates from identity beyond {TP_TOL}"
                )
        self._kraus: list[np.ndarray] | None = [_readonly(K) for K in ops]
        self._weights: np.ndarray | None = None
        self._lambdas: np.ndarray | None = None
        self._ptm: PTM | None = None
        self._lock = threading.RLock()

    @classmethod
    def from_pauli_weights(cls, n: int, weights) -> "KrausChannel":
        """Random Pauli map with probability weights[k] on Pauli string k."""
        w = _validate_probability_vector(weights, 4**n, "Pauli weight vector")
        self = cls.__new__(cls)
        self.n = int(n)
        self._kraus = None
        self._weights = _readonly(w)
        self._lambdas = None
        self._ptm = None
        self._lock = threading.RLock()
        return self

    @property
    def d(self) -> int:
        return 2**self.n

    @property
    def pauli_weights(self) -> np.ndarray | None:
        return self._weights

    @property
    def is_pauli(self) -> bool:
        return self._weights is not None

    @property
    def kraus_ops(self) -> list[np.ndarray]:
        with self._lock:
            if self._kraus is None:
                ops = []
                for k in np.nonzero(self._weights)[0]:
                    K = np.sqrt(self._weights[k]) * pauli_element(int(k), self.n)
                    ops.append(_readonly(K))
                self._kraus = ops
        return self._kraus

    def lambdas(self) -> np.ndarray:
        """Diagonal transfer-matrix entries (valid up to n = MAX_QUBITS)."""
        with self._lock:
            if self._lambdas is None:
                if self._weights is not None:
                    lam = lambdas_from_weights(self._weights, self.n)
                else:
                    ptm = self._ptm_locked()
                    if not ptm.is_diagonal():
                        raise NotPauliDiagonal(
                            "channel transfer matrix is not diagonal"
                        )
                    lam = ptm.diagonal()
                self._lambdas = _readonly(lam)
        return self._lambdas

    def _ptm_locked(self) -> PTM:
        if self._ptm is None:
            if self._weights is not None:
                _check_full_ptm_cap(self.n)
                self._ptm = PTM(self.n, np.diag(lambdas_from_weights(self._weights, self.n)))
            else:
                self._ptm = _ptm_by_columns(self.kraus_ops, self.n)
        return self._ptm

    def ptm(self) -> PTM:
        with self._lock:
            return self._ptm_locked()

    def diagonal(self) -> "PauliDiagonalChannel":
        if self._weights is not None:
            return PauliDiagonalChannel(self.n, probs=self._weights)
        return PauliDiagonalChannel(self.n, lambdas=self.lambdas())

    def apply(self, rho: np.ndarray, method: str = "auto") -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.d, self.d):
            raise DimensionMismatch(
                f"state shape {rho.shape} does not match d={self.d}"
            )
        if method == "auto":
            method = "diagonal" if (self.is_pauli and self.n >= 4) else "kraus"
        if method == "kraus":
            out = np.zeros_like(rho)
            for K in self.kraus_ops:
                out += K @ rho @ K.conj().T
            return out
        if method == "diagonal":
            return devectorize(self.lambdas() * vectorize(rho))
        if method == "ptm":
            return devectorize(self.ptm().matrix @ vectorize(rho))
        raise ValueError(f"unknown application method {method!r}")

    def __repr__(self) -> str:
        kind = "pauli" if self.is_pauli else "generic"
        return f"KrausChannel(n={self.n}, kind={kind})"


class PauliDiagonalChannel:
    """Pauli channel held as its probability vector and/or its diagonal
    transfer-matrix entries.

    ``lambdas[0]`` must be 1 (trace preservation) and every entry real
    with magnitude at most 1.
    """

    def __init__(self, n: int, probs=None, lambdas=None):
        self.n = int(n)
        if probs is None and lambdas is None:
            raise ValueError("provide probs, lambdas, or both")
        dim = 4**self.n
        self.probs = None
        if probs is not None:
            self.probs = _readonly(_validate_probability_vector(probs, dim, "beta vector"))
        if lambdas is None:
            lam = lambdas_from_weights(self.probs, self.n)
        else:
            lam = np.asarray(lambdas)
            if lam.shape != (dim,):
                raise DimensionMismatch(f"lambda vector must have length {dim}")
            if np.iscomplexobj(lam):
                if np.max(np.abs(lam.imag)) > 1e-10:
                    raise NotPauliDiagonal("lambda entries must be real")
                lam = lam.real
        lam = lam.astype(float)
        if abs(lam[0] - 1.0) > 1e-9:
            raise NotTracePreserving(f"lambda_0 must equal 1, got {float(lam[0])!r}")
        if np.max(np.abs(lam)) > 1.0 + 1e-9:
            raise NotPauliDiagonal("lambda entries must lie in [-1, 1]")
        self._lambdas = _readonly(lam)

    @property
    def d(self) -> int:
        return 2**self.n

    def lambdas(self) -> np.ndarray:
        return self._lambdas

    def ptm(self) -> PTM:
        _check_full_ptm_cap(self.n)
        return PTM(self.n, np.diag(self._lambdas))

    def to_kraus(self) -> KrausChannel:
        if self.probs is None:
            raise ValueError("no probability vector available for a Kraus form")
        return KrausChannel.from_pauli_weights(self.n, self.probs)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (self.d, self.d):
            raise DimensionMismatch(f"state shape {rho.shape} does not match d={self.d}")
        return devectorize(self._lambdas * vectorize(rho))

    def __repr__(self) -> str:
        return f"PauliDiagonalChannel(n={self.n})"


Channel = Union[KrausChannel, PauliDiagonalChannel, PTM]


def _ptm_by_columns(kraus_ops: Sequence[np.ndarray], n: int) -> PTM:
    _check_full_ptm_cap(n)
    dim = 4**n
    cols = np.empty((dim, dim), dtype=complex)
    for q in range(dim):
        Pq = pauli_element(q, n)
        out = np.zeros_like(Pq)
        for K in kraus_ops:
            out = out + K @ Pq @ K.conj().T
        cols[:, q] = vectorize(out)
    return PTM(n, cols)


def ptm_from_kraus(ch: KrausChannel) -> PTM:
    """Full transfer matrix of a Kraus channel (capped at n = 5)."""
    return ch.ptm()


def as_ptm(ch: Channel) -> PTM:
    if isinstance(ch, PTM):
        return ch
    return ch.ptm()


def diagonal_channel(ch: Channel) -> PauliDiagonalChannel:
    """View any diagonal-transfer-matrix channel as a PauliDiagonalChannel."""
    if isinstance(ch, PauliDiagonalChannel):
        return ch
    if isinstance(ch, KrausChannel):
        return ch.diagonal()
    if isinstance(ch, PTM):
        if not ch.is_diagonal():
            raise NotPauliDiagonal("transfer matrix is not diagonal")
        return PauliDiagonalChannel(ch.n, lambdas=ch.diagonal())
    raise TypeError(f"not a channel: {ch!r}")


def apply_channel(ch: Channel, rho: np.ndarray, method: str = "auto") -> np.ndarray:
    """Apply a channel to a density matrix (or any operator)."""
    if isinstance(ch, KrausChannel):
        return ch.apply(rho, method=method)
    if isinstance(ch, PauliDiagonalChannel):
        return ch.apply(rho)
    if isinstance(ch, PTM):
        rho = np.asarray(rho, dtype=complex)
        if rho.shape != (ch.d, ch.d):
            raise DimensionMismatch(f"state shape {rho.shape} does not match d={ch.d}")
        return devectorize(ch.matrix @ vectorize(rho))
    raise TypeError(f"not a channel: {ch!r}")


def adjoint_ptm(ptm: PTM) -> PTM:
    """Transfer matrix of the adjoint map: the transpose (real entries)."""
    return PTM(ptm.n, ptm.matrix.T, require_tp_row=False)


def compose(ptm_a: PTM, ptm_b: PTM) -> PTM:
    """Transfer matrix of a-after-b, i.e. the product Gamma_a @ Gamma_b."""
    if ptm_a.n != ptm_b.n:
        raise DimensionMismatch(f"qubit counts differ: {ptm_a.n} vs {ptm_b.n}")
    return PTM(ptm_a.n, ptm_a.matrix @ ptm_b.matrix, require_tp_row=False)


def ptm_power(ptm: PTM, m: int) -> PTM:
    """m-fold composition of a map with itself; m = 0 gives the identity."""
    if m < 0:
        raise ValueError(f"repetition count must be >= 0, got {m}")
    return PTM(ptm.n, np.linalg.matrix_power(ptm.matrix, m), require_tp_row=False)


def correlated_pauli_weights(n: int, p_vec, mu: float) -> np.ndarray:
    """Pauli-string probabilities of the Markov-correlated family.

    The first qubit draws its error index from ``p_vec``; every later
    qubit repeats its predecessor's index with probability mu and draws
    fresh from ``p_vec`` otherwise:

        w[a_1 ... a_n] = p[a_1] * prod_j ((1 - mu) p[a_j] + mu delta(a_{j-1}, a_j))
    """
    if n < 1 or n > MAX_QUBITS:
        raise ResourceCapExceeded(f"supported qubit range is 1..{MAX_QUBITS}, got {n}")
    p = _validate_probability_vector(p_vec, 4, "p_vec")
    mu = float(mu)
    if not 0.0 <= mu <= 1.0:
        raise InvalidCorrelation(f"correlation parameter must be in [0, 1], got {mu}")
    cond = (1.0 - mu) * np.tile(p, (4, 1)) + mu * np.eye(4)
    w = p
    for _ in range(n - 1):
        w = w[..., None] * cond
    w = w.reshape(-1)
    if abs(w.sum() - 1.0) > WEIGHT_SUM_TOL:
        raise InvalidProbability(f"weights sum to {float(w.sum())!r}, expected 1")
    return w


def correlated_pauli_channel(n: int, p_vec, mu: float) -> KrausChannel:
    """Markov-correlated random Pauli channel on n qubits."""
    return KrausChannel.from_pauli_weights(n, correlated_pauli_weights(n, p_vec, mu))


def bit_flip_channel(n: int, p: float, mu: float = 0.0) -> KrausChannel:
    """Correlated bit-flip channel: per-qubit marginal [1-p, p, 0, 0]."""
    return correlated_pauli_channel(n, [1.0 - p, p, 0.0, 0.0], mu)


def dephasing_channel(n: int, p: float, mu: float = 0.0) -> KrausChannel:
    """Correlated phase-flip channel: per-qubit marginal [1-p, 0, 0, p]."""
    return correlated_pauli_channel(n, [1.0 - p, 0.0, 0.0, p], mu)


def depolarizing_channel(n: int, q: float, mu: float = 0.0) -> KrausChannel:
    """Correlated depolarizing channel: marginal [1-3q/4, q/4, q/4, q/4].

    q = 1 contracts the single-qubit Bloch sphere to a point (every
    non-identity diagonal entry vanishes), so that channel is not
    invertible.
    """
    return correlated_pauli_channel(
        n, [1.0 - 0.75 * q, 0.25 * q, 0.25 * q, 0.25 * q], mu
    )


def correlated_amplitude_damping(eta: float, mu: float) -> KrausChannel:
    """Two-qubit amplitude damping with correlation parameter mu.

    A convex mixture of two independent single-qubit dampings (weight
    1 - mu) and a collective damping acting only on |11> (weight mu);
    1 - eta is the per-use loss probability.
    """
    eta = float(eta)
    mu = float(mu)
    if not 0.0 <= eta <= 1.0:
        raise InvalidProbability(f"transmissivity must be in [0, 1], got {eta}")
    if not 0.0 <= mu <= 1.0:
        raise InvalidCorrelation(f"correlation parameter must be in [0, 1], got {mu}")
    E0 = np.array([[1.0, 0.0], [0.0, np.sqrt(eta)]], dtype=complex)
    E1 = np.array([[0.0, np.sqrt(1.0 - eta)], [0.0, 0.0]], dtype=complex)
    singles = [np.kron(a, b) for a in (E0, E1) for b in (E0, E1)]
    B0 = np.diag([1.0, 1.0, 1.0, np.sqrt(eta)]).astype(complex)
    B1 = np.zeros((4, 4), dtype=complex)
    B1[0, 3] = np.sqrt(1.0 - eta)
    ops = [np.sqrt(1.0 - mu) * A for A in singles] + [np.sqrt(mu) * B for B in (B0, B1)]
    ops = [K for K in ops if np.max(np.abs(K)) > 0.0]
    return KrausChannel(ops)


CHANNEL_FAMILIES = ("bit_flip", "depolarizing", "dephasing", "pauli_custom", "amp_damp_corr")

# Key under which each family stores its scalar strength in a config.
STRENGTH_KEYS = {
    "bit_flip": "p",
    "depolarizing": "q",
    "dephasing": "p",
    "amp_damp_corr": "eta",
}


def channel_from_config(cfg: Mapping) -> KrausChannel:
    """Build a channel from a configuration mapping.

    Required key ``family``; the remaining keys depend on the family:

    * ``bit_flip`` / ``dephasing``: ``n``, ``p``, optional ``mu``
    * ``depolarizing``: ``n``, ``q``, optional ``mu``
    * ``pauli_custom``: ``n`` plus either ``p_vec`` (+ optional ``mu``)
      or ``beta`` (list of length 4**n, or {pauli-string: weight})
    * ``amp_damp_corr``: ``eta``, ``mu`` (n is fixed at 2)
    """
    try:
        family = cfg["family"]
    except KeyError:
        raise ConfigError("channel config lacks the 'family' key") from None
    if family not in CHANNEL_FAMILIES:
        raise ConfigError(
            f"unknown channel family {family!r}; expected one of {CHANNEL_FAMILIES}"
        )
    try:
        if family == "amp_damp_corr":
            if int(cfg.get("n", 2)) != 2:
                raise ConfigError("amp_damp_corr is defined for n=2 only")
            return correlated_amplitude_damping(float(cfg["eta"]), float(cfg.get("mu", 0.0)))
        n = int(cfg["n"])
        mu = float(cfg.get("mu", 0.0))
        if family == "bit_flip":
            return bit_flip_channel(n, float(cfg["p"]), mu)
        if family == "dephasing":
            return dephasing_channel(n, float(cfg["p"]), mu)
        if family == "depolarizing":
            return depolarizing_channel(n, float(cfg["q"]), mu)
        # pauli_custom
        if "beta" in cfg:
            beta = cfg["beta"]
            if isinstance(beta, Mapping):
                w = np.zeros(4**n)
                for label, weight in beta.items():
                    w[PauliIndex.from_label(str(label)).k] = float(weight)
            else:
                w = np.asarray(beta, dtype=float)
            return KrausChannel.from_pauli_weights(n, w)
        return correlated_pauli_channel(n, cfg["p_vec"], mu)
    except KeyError as exc:
        raise ConfigError(f"channel config for {family!r} lacks key {exc}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, (InvalidProbability, InvalidCorrelation)):
            raise
        raise ConfigError(f"bad channel config value: {exc}") from None
