"""Augmentation policies as data: parsing, sampling, and application.

A policy is a set of sub-policies; each sub-policy is an ordered list of
(kind, probability, magnitude) slots. Sampling pre-draws every stochastic
choice into a :class:`SampledTransform` so the identical transform can be
replayed on the base image and on every copied patch.

Policy file format (versioned, line oriented)::

    inaug-policy 1
    # one sub-policy per line; ops separated by ';'
    Invert 0.1 7 ; Contrast 0.2 6

Sampling consumes exactly 1 draw for the sub-policy choice plus
``DRAWS_PER_OP`` draws per op (fire, direction, reserved), whether or not
each value ends up used, so streams stay aligned when probabilities change.
"""

from __future__ import annotations

from dataclasses import dataclass

from .image import Image
from .ops import MAX_LEVEL, MagnitudeTable, OpKind, OpSpec, apply_kernel
from .rng import RngState

POLICY_HEADER = "inaug-policy 1"

DRAWS_PER_OP = 3


class SchemaError(ValueError):
    """Malformed policy or config input, with line/field diagnostics."""


@dataclass(frozen=True)
class SubPolicy:
    """Ordered transform sequence applied by composition, first op first."""

    ops: tuple[OpSpec, ...]

    def __post_init__(self):
        if len(self.ops) < 1:
            raise ValueError("a sub-policy needs at least one op")


@dataclass(frozen=True)
class Policy:
    name: str
    subpolicies: tuple[SubPolicy, ...]

    def __post_init__(self):
        if len(self.subpolicies) < 1:
            raise ValueError("a policy needs at least one sub-policy")


@dataclass(frozen=True)
class SampledTransform:
    """Every stochastic choice of one policy application, frozen.

    Applying the same value twice (to the base image or to any patch)
    yields byte-identical results.
    """

    subpolicy: int
    fired: tuple[bool, ...]
    directions: tuple[int, ...]
    params: tuple[float, ...]


def parse_policy(text: str, name: str = "policy") -> Policy:
    """Parse the versioned policy format; raises :class:`SchemaError`."""
    kinds = {k.value: k for k in OpKind}
    subpolicies: list[SubPolicy] = []
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not header_seen:
            if line != POLICY_HEADER:
                raise SchemaError(f"line {lineno}: expected header '{POLICY_HEADER}'")
            header_seen = True
            continue
        ops = []
        for piece in line.split(";"):
            fields = piece.split()
            if len(fields) != 3:
                raise SchemaError(
                    f"line {lineno}: expected 'Kind probability level', got '{piece.strip()}'"
                )
            kind_name, prob_s, level_s = fields
            if kind_name not in kinds:
                raise SchemaError(f"line {lineno}: unknown op kind '{kind_name}'")
            try:
                probability = float(prob_s)
            except ValueError:
                raise SchemaError(f"line {lineno}: bad probability '{prob_s}'") from None
            try:
                level = int(level_s)
            except ValueError:
                raise SchemaError(f"line {lineno}: bad magnitude level '{level_s}'") from None
            if not 0.0 <= probability <= 1.0:
                raise SchemaError(f"line {lineno}: probability {probability} outside [0, 1]")
            if not 0 <= level <= MAX_LEVEL:
                raise SchemaError(f"line {lineno}: magnitude level {level} outside [0, {MAX_LEVEL}]")
            ops.append(OpSpec(kinds[kind_name], probability, level))
        subpolicies.append(SubPolicy(tuple(ops)))
    if not header_seen:
        raise SchemaError(f"expected header '{POLICY_HEADER}'")
    if not subpolicies:
        raise SchemaError("policy has no sub-policies")
    return Policy(name, tuple(subpolicies))


def serialize_policy(policy: Policy) -> str:
    """Inverse of :func:`parse_policy`; round-trips losslessly."""
    lines = [POLICY_HEADER]
    for sp in policy.subpolicies:
        lines.append(
            " ; ".join(f"{op.kind.value} {op.probability!r} {op.magnitude}" for op in sp.ops)
        )
    return "\n".join(lines) + "\n"


def load_policy(path, name: str | None = None) -> Policy:
    from pathlib import Path

    p = Path(path)
    return parse_policy(p.read_text(), name=name or p.stem)


def sample_transform(
    policy: Policy, magnitudes: MagnitudeTable, rng: RngState
) -> SampledTransform:
    """Draw a sub-policy uniformly and pre-sample all per-op randomness.

    Consumes 1 + DRAWS_PER_OP * k draws, where k is the chosen
    sub-policy's length.
    """
    idx = rng.next_below(len(policy.subpolicies))
    fired = []
    directions = []
    params = []
    for spec in policy.subpolicies[idx].ops:
        fired.append(rng.next_float() < spec.probability)
        directions.append(rng.next_sign())
        rng.skip(1)  # reserved; keeps per-op consumption fixed at DRAWS_PER_OP
        params.append(magnitudes.resolve(spec.kind, spec.magnitude))
    return SampledTransform(idx, tuple(fired), tuple(directions), tuple(params))


def resample_fired(policy: Policy, t: SampledTransform, rng: RngState) -> SampledTransform:
    """Redraw fire/direction coins while keeping sub-policy and magnitudes.

    Consumes DRAWS_PER_OP draws per op, like :func:`sample_transform`.
    """
    fired = []
    directions = []
    for spec in policy.subpolicies[t.subpolicy].ops:
        fired.append(rng.next_float() < spec.probability)
        directions.append(rng.next_sign())
        rng.skip(1)
    return SampledTransform(t.subpolicy, tuple(fired), tuple(directions), t.params)


def apply_transform(img: Image, t: SampledTransform, policy: Policy) -> Image:
    """Apply the chosen sub-policy's ops in listed order with t's choices."""
    ops = policy.subpolicies[t.subpolicy].ops
    if not (len(ops) == len(t.fired) == len(t.directions) == len(t.params)):
        raise ValueError("sampled transform does not match the policy shape")
    out = img
    for spec, fired, direction, param in zip(ops, t.fired, t.directions, t.params):
        if fired:
            out = apply_kernel(out, spec.kind, param, direction)
    return out


def transform_draws(policy: Policy) -> int:
    """Draws consumed by one sample_transform for a uniform-length policy."""
    lengths = {len(sp.ops) for sp in policy.subpolicies}
    if len(lengths) != 1:
        raise ValueError("policy mixes sub-policy lengths; draw count is index-dependent")
    return 1 + DRAWS_PER_OP * lengths.pop()
