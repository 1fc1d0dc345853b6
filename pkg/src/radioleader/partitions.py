"""Random partition families with a covering guarantee.

A family is K partitions of the id space [1..N] into b parts.  It is "good"
for subset sizes up to n_max when every nonempty subset V with |V| <= n_max
has, in at least one partition, some part containing exactly one member of
V.  That singleton is what lets a transmitter hear itself alone on the
channel, so verified families turn a randomized argument into a
deterministic protocol input.

Families are generated Las Vegas style: draw K uniform partitions from a
counter-based splitmix64 stream, verify the covering property, and retry
with seed+1 on failure.  The stream is position-indexed,

    value(seed, p) = mix64((seed + (p+1) * GAMMA) mod 2^64)
    part_of(partition i, id x) = 1 + value(seed, i*N + x - 1) mod b

with mix64 the standard splitmix64 finalizer, so generation is reproducible
from (seed, N, b, K) alone, in any order and under any parallel split.  The
PRNG identifier is `splitmix64`; serialized families carry the explicit part
assignments, so files stay portable even across implementations that never
heard of the stream.

Verification is exhaustive (all subsets, within a work budget) or sampled
(uniform random subsets per size).  A failed check returns the offending
subset; it is a value, not an exception.

balls_in_bins_singleton_prob estimates the probability that throwing n
balls into b bins uniformly leaves at least one bin with exactly one ball,
together with the analytic lower bound 1 - (4n/b)^(n/2) valid for n <= b/2.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, replace
from itertools import combinations
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

PRNG_ALGORITHM = "splitmix64"
_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


class RetriesExhausted(RuntimeError):
    """No good family found within the retry budget."""


def splitmix64_at(seed: int, position: int) -> int:
    """The position-th value of the splitmix64 stream started at seed."""
    z = (seed + (position + 1) * _GAMMA) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def _splitmix64_block(seed: int, start: int, count: int) -> np.ndarray:
    positions = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    z = (np.uint64(seed & _MASK64) + positions * np.uint64(_GAMMA)).astype(np.uint64)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class Partition:
    """part_of[x-1] is the 1-based part index of id x."""

    b: int
    part_of: Tuple[int, ...]

    def part(self, ident: int) -> int:
        return self.part_of[ident - 1]


@dataclass(frozen=True)
class Certificate:
    mode: str  # "unverified" | "exhaustive" | "sampled"
    n_max: Optional[int] = None
    trials: Optional[int] = None

    @property
    def verified(self) -> bool:
        return self.mode != "unverified"

    def token(self) -> str:
        if self.mode == "exhaustive":
            return f"exhaustive:{self.n_max}"
        if self.mode == "sampled":
            return f"sampled:{self.trials}"
        return "unverified"

    @classmethod
    def from_token(cls, token: str) -> "Certificate":
        if token == "unverified":
            return cls("unverified")
        mode, _, arg = token.partition(":")
        if mode == "exhaustive":
            return cls("exhaustive", n_max=int(arg))
        if mode == "sampled":
            return cls("sampled", trials=int(arg))
        raise ValueError(f"unknown certificate token {token!r}")


@dataclass(frozen=True)
class PartitionFamily:
    N: int
    b: int
    K: int
    epsilon_tilde: float
    n_max: int
    seed: int
    c_const: int
    partitions: Tuple[Partition, ...]
    certificate: Certificate


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    certificate: Optional[Certificate]
    counterexample: Optional[Tuple[int, ...]]


def family_size(N: int, b: int, epsilon_tilde: float, c_const: int = 8) -> int:
    if b < 2:
        raise ValueError("families need b >= 2 parts")
    if not (0.0 < epsilon_tilde < 1.0):
        raise ValueError("epsilon_tilde must lie strictly between 0 and 1")
    if N <= 1:
        return 1
    ratio = math.log(N) / math.log(b)
    return max(1, math.ceil((c_const / epsilon_tilde) * ratio - 1e-9))


def _draw_partitions(N: int, b: int, K: int, seed: int) -> Tuple[Partition, ...]:
    values = _splitmix64_block(seed, 0, K * N)
    parts = (values % np.uint64(b)).astype(np.int64) + 1
    grid = parts.reshape(K, N)
    return tuple(Partition(b=b, part_of=tuple(int(x) for x in row)) for row in grid)


def subset_hits_family(partitions: Sequence[Partition], subset: Sequence[int]) -> bool:
    """True when some partition isolates one member of the subset."""
    for partition in partitions:
        seen = {}
        for ident in subset:
            p = partition.part_of[ident - 1]
            seen[p] = seen.get(p, 0) + 1
        if 1 in seen.values():
            return True
    return False


def exhaustive_budget(N: int, n_max: int) -> int:
    return sum(math.comb(N, m) for m in range(1, n_max + 1))


def verify_family(
    family: PartitionFamily,
    mode: str = "auto",
    trials: int = 10**5,
    rng_seed: int = 0,
    budget: int = 10**7,
) -> VerifyResult:
    """Check the covering property for all subset sizes 1..n_max.

    mode 'exhaustive' walks every subset (requires the total count to fit
    the work budget), 'sampled' draws `trials` uniform subsets per size,
    'auto' picks exhaustive when affordable.  The first failing subset is
    returned as the counterexample."""
    if mode == "auto":
        mode = "exhaustive" if exhaustive_budget(family.N, family.n_max) <= budget else "sampled"
    if mode == "exhaustive":
        if exhaustive_budget(family.N, family.n_max) > budget:
            raise ValueError("exhaustive verification exceeds the work budget")
        for m in range(1, family.n_max + 1):
            for subset in combinations(range(1, family.N + 1), m):
                if not subset_hits_family(family.partitions, subset):
                    return VerifyResult(False, None, subset)
        return VerifyResult(True, Certificate("exhaustive", n_max=family.n_max), None)
    if mode == "sampled":
        rng = random.Random(rng_seed)
        population = range(1, family.N + 1)
        for m in range(1, family.n_max + 1):
            for _ in range(trials):
                subset = tuple(sorted(rng.sample(population, m)))
                if not subset_hits_family(family.partitions, subset):
                    return VerifyResult(False, None, subset)
        return VerifyResult(True, Certificate("sampled", trials=trials), None)
    raise ValueError(f"unknown verification mode {mode!r}")


def generate_family(
    N: int,
    b: int,
    epsilon_tilde: float,
    n_max: int,
    seed: int = 0,
    c_const: int = 8,
    max_retries: int = 8,
    verify_mode: str = "auto",
    trials: int = 10**5,
    budget: int = 10**7,
) -> PartitionFamily:
    """Draw and verify a good family; Las Vegas with seed+1 retries.

    The returned family records the seed that actually produced it.  Raises
    RetriesExhausted when max_retries consecutive draws fail verification."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if n_max > b ** (1.0 - epsilon_tilde) + 1e-9:
        raise ValueError(
            f"n_max={n_max} exceeds b^(1-epsilon_tilde)={b ** (1.0 - epsilon_tilde):.3f}"
        )
    K = family_size(N, b, epsilon_tilde, c_const)
    for attempt in range(max_retries):
        attempt_seed = seed + attempt
        family = PartitionFamily(
            N=N,
            b=b,
            K=K,
            epsilon_tilde=epsilon_tilde,
            n_max=n_max,
            seed=attempt_seed,
            c_const=c_const,
            partitions=_draw_partitions(N, b, K, attempt_seed),
            certificate=Certificate("unverified"),
        )
        result = verify_family(family, mode=verify_mode, trials=trials, budget=budget)
        if result.ok:
            return replace(family, certificate=result.certificate)
    raise RetriesExhausted(
        f"no good family for N={N} b={b} n_max={n_max} after {max_retries} seeds"
    )


# ---------------------------------------------------------------------------
# serialization: header line `N b K epsilon_tilde n_max seed C verifier`,
# then K lines of N space-separated part indices.


def dump_family(family: PartitionFamily) -> str:
    header = (
        f"{family.N} {family.b} {family.K} {family.epsilon_tilde!r} "
        f"{family.n_max} {family.seed} {family.c_const} {family.certificate.token()}"
    )
    rows = [" ".join(str(p) for p in part.part_of) for part in family.partitions]
    return "\n".join([header] + rows) + "\n"


def save_family(family: PartitionFamily, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dump_family(family))


def parse_family(text: str) -> PartitionFamily:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    fields = lines[0].split()
    if len(fields) != 8:
        raise ValueError("family header must have 8 fields")
    N, b, K = int(fields[0]), int(fields[1]), int(fields[2])
    epsilon_tilde = float(fields[3])
    n_max, seed, c_const = int(fields[4]), int(fields[5]), int(fields[6])
    certificate = Certificate.from_token(fields[7])
    if len(lines) != 1 + K:
        raise ValueError(f"expected {K} partition rows, found {len(lines) - 1}")
    partitions = []
    for ln in lines[1:]:
        row = tuple(int(tok) for tok in ln.split())
        if len(row) != N or any(not 1 <= p <= b for p in row):
            raise ValueError("malformed partition row")
        partitions.append(Partition(b=b, part_of=row))
    return PartitionFamily(
        N=N,
        b=b,
        K=K,
        epsilon_tilde=epsilon_tilde,
        n_max=n_max,
        seed=seed,
        c_const=c_const,
        partitions=tuple(partitions),
        certificate=certificate,
    )


def load_family(path) -> PartitionFamily:
    with open(path, "r", encoding="ascii") as fh:
        return parse_family(fh.read())


# ---------------------------------------------------------------------------
# balls into bins


@dataclass(frozen=True)
class SingletonEstimate:
    n: int
    b: int
    trials: int
    seed: int
    p_hat: float
    analytic_lower_bound: float


def singleton_lower_bound(n: int, b: int) -> float:
    return 1.0 - (4.0 * n / b) ** (n / 2.0)


def balls_in_bins_singleton_prob(
    n: int, b: int, trials: int = 10**5, seed: int = 0
) -> SingletonEstimate:
    """Monte Carlo estimate of Pr[some bin holds exactly one of n balls]."""
    if n < 1:
        raise ValueError("need at least one ball")
    if 2 * n > b:
        raise ValueError("the analytic bound needs n <= b/2")
    if trials < 10**4:
        raise ValueError("use at least 10^4 trials")
    rng = random.Random(seed)
    hits = 0
    for _ in range(trials):
        counts: dict = {}
        for _ in range(n):
            bin_ = rng.randrange(b)
            counts[bin_] = counts.get(bin_, 0) + 1
        if 1 in counts.values():
            hits += 1
    return SingletonEstimate(
        n=n,
        b=b,
        trials=trials,
        seed=seed,
        p_hat=hits / trials,
        analytic_lower_bound=singleton_lower_bound(n, b),
    )
