"""Poisoned integer values and operator-interception semantics.

A PoisonedScalar wraps a signed 64-bit integer together with a poison policy
and a private draw stream. Programs apply operators through binop()/unop()
instead of native operators; each application records one OperatorEvent and,
when an unsuppressed operand is poisoned, may emit a deviated result.

Deviation is an emission phenomenon: arithmetic results handed back to the
program always carry the exact clean value (the shadow computation), while
the deviated number is visible in the event trace. Comparison results are
plain booleans and DO return the deviated (negated) truth value — they are
the channel through which poisoning perturbs control flow.

Monitoring code runs inside a suppression scope (with_suppression or
EvalContext.suppression), which forces clean semantics and leaves poison
lifetimes untouched, so observation never alters the experiment.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction

from ._backend import KERNEL_BACKEND, kernel
from .trace_metrics import OperatorEvent

INT64_MIN = kernel.INT64_MIN
INT64_MAX = kernel.INT64_MAX

_U64_MAX = (1 << 64) - 1

DEVIATION_KINDS = ("offset", "scale", "stuck_at", "bitflip")

_DEV_CODES = {
    "offset": kernel.DEV_OFFSET,
    "scale": kernel.DEV_SCALE,
    "stuck_at": kernel.DEV_STUCK_AT,
    "bitflip": kernel.DEV_BITFLIP,
}

_OP_CODES = {
    "add": kernel.OP_ADD,
    "sub": kernel.OP_SUB,
    "mul": kernel.OP_MUL,
    "mod": kernel.OP_MOD,
    "eq": kernel.OP_EQ,
    "neq": kernel.OP_NEQ,
    "lt": kernel.OP_LT,
}

ARITHMETIC_OPS = ("add", "sub", "mul", "mod")
COMPARISON_OPS = ("eq", "neq", "lt")


class PolicyError(ValueError):
    """Invalid deviation model or poison policy."""


class ArithmeticFault(ArithmeticError):
    """Overflow or division error inside an intercepted operation."""

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step
        self.node = None
        self.round_index = None

    def __str__(self):
        text = self.args[0]
        if self.step is not None:
            text += f" (step {self.step}"
            if self.node is not None:
                text += f", node {self.node}, round {self.round_index}"
            text += ")"
        return text


def kernel_backend() -> str:
    """Which operator kernel is active: "c" (compiled) or "py"."""
    return KERNEL_BACKEND


def _as_rational(value, field: str) -> Fraction:
    if isinstance(value, bool):
        raise PolicyError(f"{field} must be a number, not bool")
    if isinstance(value, float):
        # Shortest-decimal reading: 1.01 means 101/100, not the binary float.
        try:
            return Fraction(str(value))
        except ValueError:
            raise PolicyError(f"{field} must be finite") from None
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    raise PolicyError(f"{field} must be a number")


@dataclass(frozen=True)
class DeviationModel:
    """How an emitted result differs from the clean one.

    kind "offset": emitted = clean + magnitude (rational, nonzero)
    kind "scale": emitted = clean * magnitude (rational, not 1), half-to-even
    kind "stuck_at": emitted = magnitude (a 64-bit constant)
    kind "bitflip": emitted = clean with bit `magnitude` (0..63) toggled
    """

    kind: str
    magnitude: int | float | Fraction

    def __post_init__(self):
        if self.kind not in _DEV_CODES:
            raise PolicyError(
                f"deviation kind must be one of {DEVIATION_KINDS}, got {self.kind!r}"
            )
        if self.kind == "offset":
            mag = _as_rational(self.magnitude, "offset magnitude")
            if mag == 0:
                raise PolicyError("offset magnitude must be nonzero")
            self._freeze(mag, mag.numerator, mag.denominator)
        elif self.kind == "scale":
            mag = _as_rational(self.magnitude, "scale magnitude")
            if mag == 1:
                raise PolicyError("scale magnitude must not be 1")
            self._freeze(mag, mag.numerator, mag.denominator)
        elif self.kind == "stuck_at":
            if not isinstance(self.magnitude, int) or isinstance(self.magnitude, bool):
                raise PolicyError("stuck_at magnitude must be an integer")
            if not INT64_MIN <= self.magnitude <= INT64_MAX:
                raise PolicyError("stuck_at magnitude outside signed 64-bit range")
            self._freeze(self.magnitude, self.magnitude, 1)
        else:  # bitflip
            if not isinstance(self.magnitude, int) or isinstance(self.magnitude, bool):
                raise PolicyError("bitflip magnitude must be a bit index")
            if not 0 <= self.magnitude <= 63:
                raise PolicyError("bitflip bit index must lie in [0, 63]")
            self._freeze(self.magnitude, self.magnitude, 1)

    def _freeze(self, magnitude, num, den):
        if not (INT64_MIN <= num <= INT64_MAX and 0 < den <= INT64_MAX):
            raise PolicyError("magnitude numerator/denominator exceed 64 bits")
        object.__setattr__(self, "magnitude", magnitude)
        object.__setattr__(self, "_code", _DEV_CODES[self.kind])
        object.__setattr__(self, "_num", num)
        object.__setattr__(self, "_den", den)


@dataclass(frozen=True)
class PoisonPolicy:
    """Three-axis poisoning behavior plus a deviation model.

    rate None means deterministic effect (deviate on every use); otherwise
    deviate per use with probability rate, drawn from the value's stream.
    uses None means the poison never expires; otherwise it clears after that
    many unsuppressed uses. infectious controls whether arithmetic results
    derived from the value are poisoned themselves.
    """

    deviation: DeviationModel
    rate: float | None = None
    uses: int | None = None
    infectious: bool = False

    def __post_init__(self):
        if not isinstance(self.deviation, DeviationModel):
            raise PolicyError("deviation must be a DeviationModel")
        if self.rate is not None:
            if isinstance(self.rate, bool) or not isinstance(self.rate, (int, float)):
                raise PolicyError("rate must be a number")
            if not 0.0 < self.rate < 1.0:
                raise PolicyError(
                    'rate must lie in (0,1); use effect "deterministic" for certain deviation'
                )
            object.__setattr__(self, "rate", float(self.rate))
        if self.uses is not None:
            if not isinstance(self.uses, int) or isinstance(self.uses, bool):
                raise PolicyError("uses must be an integer")
            if self.uses < 1:
                raise PolicyError("uses must be at least 1")

    @property
    def is_intermittent(self) -> bool:
        return self.rate is not None

    @property
    def is_transient(self) -> bool:
        return self.uses is not None


class PoisonedScalar:
    """A signed 64-bit value carrying poison state and its own draw stream.

    policy is None once the value is clean (never poisoned, or expired).
    """

    __slots__ = ("clean_value", "policy", "uses_remaining", "origin_id", "rng_state")

    def __init__(self, clean_value, policy, origin_id, rng_state):
        self.clean_value = clean_value
        self.policy = policy
        self.uses_remaining = policy.uses if policy is not None else None
        self.origin_id = origin_id
        self.rng_state = rng_state

    def _consume_use(self):
        """Spend one unsuppressed use; returns the remaining count (transient only)."""
        policy = self.policy
        if policy is None or policy.uses is None:
            return None
        self.uses_remaining -= 1
        remaining = self.uses_remaining
        if remaining == 0:
            self.policy = None
            self.uses_remaining = None
        return remaining

    def __repr__(self):
        if self.policy is None:
            return f"PoisonedScalar({self.clean_value}, clean)"
        detail = f"origin={self.origin_id}"
        if self.uses_remaining is not None:
            detail += f", uses_remaining={self.uses_remaining}"
        return f"PoisonedScalar({self.clean_value}, poisoned, {detail})"


class EvalContext:
    """Per-run interception state: suppression depth, step counter, event sink.

    Confined to one logical thread; run concurrent experiments on separate
    contexts with separate sinks.
    """

    __slots__ = ("event_sink", "suppression_depth", "step_counter")

    def __init__(self, event_sink=None):
        self.event_sink = [] if event_sink is None else event_sink
        self.suppression_depth = 0
        self.step_counter = 0

    @property
    def suppressed(self) -> bool:
        return self.suppression_depth > 0

    @contextmanager
    def suppression(self):
        """Dynamic scope with poisoning disabled; nests and survives errors."""
        self.suppression_depth += 1
        try:
            yield self
        finally:
            self.suppression_depth -= 1


def with_suppression(ctx: EvalContext, body, *args, **kwargs):
    """Run body(*args, **kwargs) inside a suppression scope and return its result."""
    with ctx.suppression():
        return body(*args, **kwargs)


def is_poisoned(value) -> bool:
    """True iff the value currently carries active poison."""
    return isinstance(value, PoisonedScalar) and value.policy is not None


def clean_value_of(value) -> int:
    """Underlying exact integer of a scalar or plain int."""
    if isinstance(value, PoisonedScalar):
        return value.clean_value
    return _check_operand(value)


def _check_operand(value) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise TypeError(f"operand must be an integer scalar, got {type(value).__name__}")
    if not INT64_MIN <= value <= INT64_MAX:
        raise ValueError("operand exceeds signed 64-bit range")
    return value


def make_poisoned(value: int, policy: PoisonPolicy, origin_id: int, seed: int) -> PoisonedScalar:
    """Wrap a value as poisoned; the draw stream derives from (seed, origin_id)."""
    value = _check_operand(value)
    if not isinstance(policy, PoisonPolicy):
        raise PolicyError("policy must be a PoisonPolicy")
    if not isinstance(origin_id, int) or isinstance(origin_id, bool):
        raise PolicyError("origin_id must be an integer")
    if not isinstance(seed, int) or isinstance(seed, bool) or not 0 <= seed <= _U64_MAX:
        raise PolicyError("seed must be an unsigned 64-bit integer")
    return PoisonedScalar(value, policy, origin_id, kernel.stream_seed(seed, origin_id))


def deviate(model: DeviationModel, clean: int) -> int:
    """Pure deviation application; raises OverflowError when the result leaves int64."""
    return kernel.apply_deviation(model._code, _check_operand(clean), model._num, model._den)


def binop(op: str, lhs, rhs, ctx: EvalContext):
    """Apply one intercepted binary operator.

    Arithmetic ops (add/sub/mul/mod) return the clean result, wrapped as a
    poisoned scalar when the governing operand's policy is infectious.
    Comparison ops (eq/neq/lt) return the emitted boolean. Exactly one
    OperatorEvent is recorded either way.
    """
    code = _OP_CODES.get(op)
    if code is None:
        raise ValueError(f"unknown operator {op!r}")
    a = clean_value_of(lhs)
    b = clean_value_of(rhs)
    step = ctx.step_counter
    ctx.step_counter = step + 1
    try:
        raw = kernel.clean_binop(code, a, b)
    except (OverflowError, ZeroDivisionError) as exc:
        raise ArithmeticFault(f"{op}: {exc}", step) from exc
    is_comparison = code >= kernel.OP_EQ
    clean_result = bool(raw) if is_comparison else raw

    lhs_poisoned = is_poisoned(lhs)
    rhs_poisoned = is_poisoned(rhs)
    governing = lhs if lhs_poisoned else (rhs if rhs_poisoned else None)
    suppressed = ctx.suppression_depth > 0

    deviated = False
    emitted = clean_result
    origin = governing.origin_id if governing is not None else None
    lifetime_after = None
    result = emitted if is_comparison else clean_result

    if governing is not None and not suppressed:
        policy = governing.policy
        if policy.rate is None:
            deviated = True
        else:
            governing.rng_state, deviated = kernel.bernoulli(
                governing.rng_state, policy.rate
            )
        if lhs_poisoned:
            remaining = lhs._consume_use()
            if lhs is governing:
                lifetime_after = remaining
        if rhs_poisoned and rhs is not lhs:
            remaining = rhs._consume_use()
            if rhs is governing:
                lifetime_after = remaining
        if deviated:
            if is_comparison:
                emitted = not clean_result
            else:
                model = policy.deviation
                try:
                    emitted = kernel.apply_deviation(
                        model._code, clean_result, model._num, model._den
                    )
                except OverflowError as exc:
                    raise ArithmeticFault(f"{op} deviation: {exc}", step) from exc
        if is_comparison:
            result = emitted
        elif policy.infectious:
            result = PoisonedScalar(
                clean_result,
                policy,
                governing.origin_id,
                kernel.stream_child(governing.rng_state, step),
            )
    elif governing is not None:
        lifetime_after = governing.uses_remaining

    ctx.event_sink.append(
        OperatorEvent(
            step=step,
            op=op,
            lhs_clean=a,
            lhs_poisoned=lhs_poisoned,
            deviated=deviated,
            clean_result=clean_result,
            emitted_result=emitted,
            suppressed=suppressed,
            rhs_clean=b,
            rhs_poisoned=rhs_poisoned,
            origin_id=origin,
            lifetime_after=lifetime_after,
        )
    )
    return result


def unop(op: str, operand, ctx: EvalContext):
    """Apply one intercepted unary operator (neg); same contract as binop."""
    if op != "neg":
        raise ValueError(f"unknown operator {op!r}")
    a = clean_value_of(operand)
    step = ctx.step_counter
    ctx.step_counter = step + 1
    try:
        clean_result = kernel.checked_neg(a)
    except OverflowError as exc:
        raise ArithmeticFault(f"neg: {exc}", step) from exc

    poisoned = is_poisoned(operand)
    suppressed = ctx.suppression_depth > 0
    deviated = False
    emitted = clean_result
    origin = operand.origin_id if poisoned else None
    lifetime_after = None
    result = clean_result

    if poisoned and not suppressed:
        policy = operand.policy
        if policy.rate is None:
            deviated = True
        else:
            operand.rng_state, deviated = kernel.bernoulli(
                operand.rng_state, policy.rate
            )
        lifetime_after = operand._consume_use()
        if deviated:
            model = policy.deviation
            try:
                emitted = kernel.apply_deviation(
                    model._code, clean_result, model._num, model._den
                )
            except OverflowError as exc:
                raise ArithmeticFault(f"neg deviation: {exc}", step) from exc
        if policy.infectious:
            result = PoisonedScalar(
                clean_result,
                policy,
                operand.origin_id,
                kernel.stream_child(operand.rng_state, step),
            )
    elif poisoned:
        lifetime_after = operand.uses_remaining

    ctx.event_sink.append(
        OperatorEvent(
            step=step,
            op=op,
            lhs_clean=a,
            lhs_poisoned=poisoned,
            deviated=deviated,
            clean_result=clean_result,
            emitted_result=emitted,
            suppressed=suppressed,
            origin_id=origin,
            lifetime_after=lifetime_after,
        )
    )
    return result
