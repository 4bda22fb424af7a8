"""Self-contained black-box objectives for the optimizer, all minimized.

LABS scores a binary sequence by (minus) its merit factor.  The Ising
sparsification objective measures, by exact enumeration of a 4x4 spin
lattice, how far dropping interaction edges moves the Gibbs distribution,
plus an L1 edge penalty.  The tabular objective looks complete enumerated
benchmarks up from a CSV file through a fixed-width binary encoding of
categorical sequences.
"""

from __future__ import annotations

import csv
import json
import math
import threading
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, InvalidPointError, TableLoadError
from .features import validate_point

GRID_SIDE = 4
NUM_SPINS = GRID_SIDE * GRID_SIDE
NUM_EDGES = 2 * GRID_SIDE * (GRID_SIDE - 1)


class Objective:
    """Named objective with a thread-safe evaluation counter."""

    def __init__(self, name, dimension, fn):
        self.name = name
        self.dimension = dimension
        self._fn = fn
        self._count = 0
        self._lock = threading.Lock()

    def __call__(self, x):
        value = float(self._fn(x))
        with self._lock:
            self._count += 1
        return value

    @property
    def evaluation_count(self):
        return self._count


def labs_objective(x):
    """Minus the merit factor n^2 / E(x) of a binary sequence.

    Bits map 0 -> +1, 1 -> -1; E is the sum of squared aperiodic
    autocorrelations, which is >= 1 for n >= 2 since the lag-(n-1) term is
    a single +-1 product.
    """
    x = validate_point(x)
    n = x.shape[0]
    if n < 2:
        raise ConfigurationError("sequence length must be >= 2")
    s = 1.0 - 2.0 * x.astype(np.float64)
    energy = 0.0
    for k in range(1, n):
        energy += float(s[:n - k] @ s[k:]) ** 2
    assert energy > 0.0, "lag n-1 autocorrelation is always +-1"
    return -(n * n) / energy


def labs_benchmark(n):
    return Objective("labs", n, labs_objective)


def grid_edges():
    """Edges of the 4x4 lattice: horizontal row-major, then vertical."""
    edges = []
    for r in range(GRID_SIDE):
        for c in range(GRID_SIDE - 1):
            edges.append((r * GRID_SIDE + c, r * GRID_SIDE + c + 1))
    for r in range(GRID_SIDE - 1):
        for c in range(GRID_SIDE):
            edges.append((r * GRID_SIDE + c, (r + 1) * GRID_SIDE + c))
    return edges


def _spin_products():
    """(-1/+1 products s_i * s_j) for all 2^16 states and all 24 edges."""
    states = np.arange(1 << NUM_SPINS, dtype=np.int64)
    spins = 1.0 - 2.0 * ((states[:, None] >> np.arange(NUM_SPINS)) & 1)
    edges = grid_edges()
    prod = np.empty((states.shape[0], NUM_EDGES))
    for e, (i, j) in enumerate(edges):
        prod[:, e] = spins[:, i] * spins[:, j]
    return prod


def _log_partition(products, couplings):
    energies = products @ couplings
    m = energies.max()
    return float(m + np.log(np.exp(energies - m).sum()))


@dataclass
class IsingSpec:
    """Zero-field lattice model with exact cached moments and log-partition."""

    seed: int
    reg_weight: float
    couplings: np.ndarray
    log_z: float
    moments: np.ndarray
    spin_products: np.ndarray = field(repr=False)

    def export(self):
        return {
            "seed": self.seed,
            "couplings": [float(v) for v in self.couplings],
            "reg_weight": self.reg_weight,
        }

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.export(), fh, indent=2, sort_keys=True)


def make_ising(rng_seed, reg_weight):
    """Draw seeded couplings on [0.05, 5] with random signs; cache exact stats."""
    rng = np.random.default_rng(rng_seed)
    magnitudes = rng.uniform(0.05, 5.0, size=NUM_EDGES)
    signs = 2.0 * rng.integers(0, 2, size=NUM_EDGES) - 1.0
    couplings = magnitudes * signs
    products = _spin_products()
    log_z = _log_partition(products, couplings)
    weights = np.exp(products @ couplings - log_z)
    moments = weights @ products
    return IsingSpec(seed=rng_seed, reg_weight=float(reg_weight),
                     couplings=couplings, log_z=log_z, moments=moments,
                     spin_products=products)


def ising_objective(x, spec):
    """KL divergence from the full model to the edge-masked one, plus L1.

    One bit per edge; edge e is kept iff x_e = 1.  The divergence is
    sum_e (Jp_e - Jq_e) E_p[s_e] + log Z_q - log Z_p, with Z_q enumerated
    exactly over all 2^16 spin states.
    """
    x = validate_point(x, NUM_EDGES).astype(np.float64)
    masked = spec.couplings * x
    log_zq = _log_partition(spec.spin_products, masked)
    dkl = float((spec.couplings - masked) @ spec.moments) + log_zq - spec.log_z
    return dkl + spec.reg_weight * float(x.sum())


def ising_benchmark(spec):
    return Objective("ising", NUM_EDGES, lambda x: ising_objective(x, spec))


def _symbol_width(alphabet_size):
    if alphabet_size < 2:
        raise ConfigurationError("alphabet must contain at least two symbols")
    return max(1, math.ceil(math.log2(alphabet_size)))


def encode_categorical(sequence, alphabet):
    """Fixed-width binary encoding of a symbol sequence, MSB first per symbol."""
    index = {sym: k for k, sym in enumerate(alphabet)}
    width = _symbol_width(len(alphabet))
    bits = []
    for sym in sequence:
        if sym not in index:
            raise ConfigurationError(f"symbol {sym!r} not in alphabet")
        v = index[sym]
        bits.extend((v >> (width - 1 - k)) & 1 for k in range(width))
    return np.array(bits, dtype=np.int8)


def decode_categorical(x, alphabet, length):
    """Inverse of encode_categorical; codes above the alphabet are invalid."""
    width = _symbol_width(len(alphabet))
    x = validate_point(x, length * width)
    symbols = []
    for pos in range(length):
        code = 0
        for k in range(width):
            code = (code << 1) | int(x[pos * width + k])
        if code >= len(alphabet):
            raise InvalidPointError(
                f"code {code} at position {pos} exceeds alphabet size {len(alphabet)}")
        symbols.append(alphabet[code])
    return "".join(symbols)


@dataclass
class TabularSpec:
    """Complete lookup table over all length-L sequences of an alphabet."""

    alphabet: tuple
    sequence_length: int
    table: dict
    sign: int

    @property
    def num_bits(self):
        return self.sequence_length * _symbol_width(len(self.alphabet))

    def evaluate(self, x):
        seq = decode_categorical(x, self.alphabet, self.sequence_length)
        return self.sign * self.table[seq]


def load_tabular(path, sign=1, alphabet=None):
    """Load a complete `sequence,value` CSV as a tabular objective.

    The alphabet is inferred (sorted) when not given.  Duplicate or missing
    sequences, ragged lengths, and unknown symbols are load errors that name
    the offending line.
    """
    if sign not in (1, -1):
        raise ConfigurationError(f"sign must be +1 or -1, got {sign}")
    table = {}
    length = None
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["sequence", "value"]:
            raise TableLoadError(
                f"{path}: expected header 'sequence,value', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if len(row) != 2:
                raise TableLoadError(f"{path}:{lineno}: expected 2 columns")
            seq, raw = row
            if length is None:
                length = len(seq)
            elif len(seq) != length:
                raise TableLoadError(
                    f"{path}:{lineno}: sequence length {len(seq)} != {length}")
            if seq in table:
                raise TableLoadError(f"{path}:{lineno}: duplicate sequence {seq!r}")
            try:
                table[seq] = float(raw)
            except ValueError:
                raise TableLoadError(f"{path}:{lineno}: bad value {raw!r}") from None
    if not table:
        raise TableLoadError(f"{path}: no data rows")
    symbols = tuple(sorted({sym for seq in table for sym in seq}))
    if alphabet is not None:
        alphabet = tuple(alphabet)
        unknown = set(symbols) - set(alphabet)
        if unknown:
            raise TableLoadError(
                f"{path}: symbols {sorted(unknown)} not in declared alphabet")
    else:
        alphabet = symbols
    expected = len(alphabet) ** length
    if len(table) != expected:
        raise TableLoadError(
            f"{path}: table has {len(table)} sequences, expected {expected} "
            f"for alphabet size {len(alphabet)} and length {length}")
    return TabularSpec(alphabet=alphabet, sequence_length=length,
                       table=table, sign=sign)


def tabular_benchmark(spec):
    return Objective("tabular", spec.num_bits, spec.evaluate)


def worst_decile_points(spec, count, rng):
    """Seeded draw of initial points from the worst 10% of a lookup table.

    Worst means largest signed objective value (this is a minimization
    problem); used as an adversarial initialization option.
    """
    items = sorted(spec.table.items(), key=lambda kv: (-spec.sign * kv[1], kv[0]))
    pool = items[:max(1, len(items) // 10)]
    picks = rng.integers(0, len(pool), size=count)
    return np.stack([
        encode_categorical(pool[int(k)][0], spec.alphabet) for k in picks])
