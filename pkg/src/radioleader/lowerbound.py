"""Necessary-condition checkers for deterministic election lower bounds.

These do not prove a lower bound; they mechanically test the combinatorial
facts the impossibility arguments rest on, against concrete protocol
implementations at desk scale:

  * canonical sequences: the I/L/T pattern a device settles into when the
    channel never delivers anything (listeners hear silence, transmitters
    learn nothing or see a collision, depending on the feedback style);
  * uniqueness: two distinct ids must not produce identical canonical
    sequences, else running exactly that pair leaves them in lockstep
    forever and both or neither win;
  * matching counts: how many of 2^t pattern words are consistent with a
    canonical sequence of listen-weight <= k, which caps how much an
    adversary must branch;
  * potential active slots: replaying one device against every feedback
    history with at most k non-idle steps touches <= 2^k distinct slots.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from math import comb
from typing import Iterable, List, Optional, Sequence, Tuple

from .channel import COLLISION, NO_FEEDBACK, SILENCE, Feedback
from .runtime import DeviceProgram, ProtocolConfig, Verdict

# Feedback styles for the adversarial channel that never delivers a message.
# receiver style: transmitters learn nothing (their side has no feedback);
# strong style: transmitters are told there was a collision.
RECEIVER_STYLE = "receiver"
STRONG_STYLE = "strong"


def _forced_feedback(action_kind: str, style: str) -> Feedback:
    if action_kind == "listen":
        return SILENCE
    if style == STRONG_STYLE:
        return COLLISION
    return NO_FEEDBACK


def canonical_sequence(factory, device_id: int, config: ProtocolConfig,
                       style: str = RECEIVER_STYLE) -> str:
    """I/L/T string of length schedule_length(config) describing what the
    device does when it never hears a message and never delivers one."""
    if style not in (RECEIVER_STYLE, STRONG_STYLE):
        raise ValueError(f"unknown feedback style {style!r}")
    total = factory.schedule_length(config)
    out = ["I"] * total
    program = factory(device_id, config)
    gen = program.run()
    try:
        rnd, action = next(gen)
        while True:
            out[rnd] = "T" if action.kind == "transmit" else "L"
            rnd, action = gen.send(_forced_feedback(action.kind, style))
    except StopIteration:
        pass
    return "".join(out)


@dataclass(frozen=True)
class ViolationPair:
    id_a: int
    id_b: int
    sequence: str


def uniqueness_check(factory, config: ProtocolConfig,
                     style: str = STRONG_STYLE) -> Optional[ViolationPair]:
    """Return the first pair of ids in [1..N] with identical canonical
    sequences, or None when all N sequences differ."""
    seen = {}
    for ident in range(1, config.N + 1):
        seq = canonical_sequence(factory, ident, config, style=style)
        if seq in seen:
            return ViolationPair(seen[seq], ident, seq)
        seen[seq] = ident
    return None


def _masks(sequence: str) -> Tuple[int, int]:
    """(non-idle bitmask, transmit bitmask), bit p = position p."""
    nonidle = 0
    tx = 0
    for p, ch in enumerate(sequence):
        if ch == "I":
            continue
        nonidle |= 1 << p
        if ch == "T":
            tx |= 1 << p
    return nonidle, tx


def matching_count(sequences: Sequence[str], k: int,
                   trials: Optional[int] = None, seed: int = 0) -> int:
    """Max over pattern words w in {L,T}^t of how many sequences match w,
    where a sequence matches iff every non-idle position agrees with w.

    Exhaustive for t <= 20 (or when trials is None); otherwise sampled.
    Sequences must share one length t and have <= k non-idle positions."""
    if not sequences:
        return 0
    t = len(sequences[0])
    masks = []
    for seq in sequences:
        if len(seq) != t:
            raise ValueError("sequences must all have the same length")
        nonidle, tx = _masks(seq)
        if bin(nonidle).count("1") > k:
            raise ValueError(f"sequence exceeds the energy budget k={k}")
        masks.append((nonidle, tx))

    if trials is None:
        if t > 20:
            raise ValueError("exhaustive matching needs t <= 20; pass trials")
        counts = [0] * (1 << t)
        full = (1 << t) - 1
        for nonidle, tx in masks:
            free = full & ~nonidle
            # enumerate submasks of the free positions; w = tx | submask
            sub = free
            while True:
                counts[tx | sub] += 1
                if sub == 0:
                    break
                sub = (sub - 1) & free
        return max(counts)

    rng = random.Random(seed)
    best = 0
    for _ in range(trials):
        w = rng.getrandbits(t)
        hits = sum(1 for nonidle, tx in masks if (w & nonidle) == tx)
        best = max(best, hits)
    return best


def sequence_budget(t: int, k: int) -> int:
    """Sum over i=1..min(k,t) of C(t,i)*2^i: how many distinct non-empty
    canonical sequences of length t fit in an energy budget of k."""
    return sum(comb(t, i) * (1 << i) for i in range(1, min(k, t) + 1))


class BudgetExceeded(RuntimeError):
    """A feedback branch drove the device past k non-idle slots."""


def potential_active_slots(factory, device_id: int, config: ProtocolConfig,
                           k: int) -> int:
    """Count the slots the device can possibly be non-idle in, over every
    adversarial feedback history (each non-idle step answered with either
    collision or silence).  Raises BudgetExceeded if any branch uses more
    than k non-idle slots; otherwise the count is at most 2^k."""
    active = set()

    def explore(prefix: List[Feedback]):
        program = factory(device_id, config)
        gen = program.run()
        try:
            rnd, action = next(gen)
            for fb in prefix:
                rnd, action = gen.send(fb)
        except StopIteration:
            return
        # the program is now stopped at its (len(prefix)+1)-th non-idle slot
        if len(prefix) + 1 > k:
            raise BudgetExceeded(
                f"device {device_id} reached non-idle slot #{len(prefix) + 1} "
                f"with budget k={k}"
            )
        active.add(rnd)
        explore(prefix + [COLLISION])
        explore(prefix + [SILENCE])

    explore([])
    count = len(active)
    assert count <= (1 << k)
    return count


class IdObliviousProgram(DeviceProgram):
    """Deliberately broken fixture: every device transmits in every one of
    its 4 slots regardless of id, so no pair of ids can be separated."""

    @classmethod
    def schedule_length(cls, config) -> int:
        return 4

    def run(self):
        from .channel import transmit

        for rnd in range(4):
            yield (rnd, transmit(self.device_id))

    def finish(self) -> Verdict:
        # claims victory by id alone, never by what happened on the channel
        return Verdict(is_leader=self.device_id == 1)
