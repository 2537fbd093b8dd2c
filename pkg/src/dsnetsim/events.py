"""Kernel messages: timestamped events with a globally unique identity so a
cancellation (anti-message) can match the exact event it undoes."""

from __future__ import annotations

ARRIVE = 0
SEND = 1
GENERATE = 2
REFILL = 3

KIND_NAMES = {ARRIVE: "ARRIVE", SEND: "SEND", GENERATE: "GENERATE", REFILL: "REFILL"}

POSITIVE = 0
ANTI = 1


class Event:
    """One timestamped message. ``(sender, seq)`` is the unique identity used
    for anti-message matching; the full key adds a deterministic total order
    over simultaneous events."""

    __slots__ = ("time", "target", "kind", "payload", "sender", "seq", "sign", "dead")

    def __init__(self, time, target, kind, payload, sender, seq, sign=POSITIVE):
        self.time = time
        self.target = target
        self.kind = kind
        self.payload = payload
        self.sender = sender
        self.seq = seq
        self.sign = sign
        # set when an anti-message annihilates this event while it is still
        # queued; the scheduler skips dead events lazily
        self.dead = False

    @property
    def key(self):
        return (self.time, self.target, self.sender, self.seq)

    @property
    def eid(self):
        return (self.sender, self.seq)

    def as_anti(self) -> "Event":
        return Event(self.time, self.target, self.kind, None, self.sender, self.seq, ANTI)

    def __repr__(self):
        sign = "-" if self.sign == ANTI else "+"
        return (
            f"Event({sign}{KIND_NAMES[self.kind]} t={self.time} "
            f"lp={self.target} eid={self.sender}:{self.seq})"
        )
