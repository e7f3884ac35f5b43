# cython: language_level=3, cdivision=True
"""Compiled operator kernel.

Bit-for-bit twin of poisonring._kernel_py: checked 64-bit signed arithmetic,
deviation application, and the SplitMix64 draw stream. 128-bit intermediates
make the overflow checks and rational rounding exact.
"""

cdef extern from *:
    ctypedef long long int128 "__int128"

INT64_MIN = -(2 ** 63)
INT64_MAX = 2 ** 63 - 1

OP_ADD = 0
OP_SUB = 1
OP_MUL = 2
OP_MOD = 3
OP_EQ = 4
OP_NEQ = 5
OP_LT = 6

DEV_OFFSET = 0
DEV_SCALE = 1
DEV_STUCK_AT = 2
DEV_BITFLIP = 3

cdef long long _I64_MIN = <long long> (-9223372036854775807LL - 1)
cdef long long _I64_MAX = <long long> 9223372036854775807LL

cdef double _INV_2_53 = 1.0 / 9007199254740992.0

cdef unsigned long long _SM64_GAMMA = 0x9E3779B97F4A7C15ULL
cdef unsigned long long _SM64_MIX1 = 0xBF58476D1CE4E5B9ULL
cdef unsigned long long _SM64_MIX2 = 0x94D049BB133111EBULL


cdef inline long long _checked(int128 value) except? -1:
    if value < <int128> _I64_MIN or value > <int128> _I64_MAX:
        raise OverflowError("result exceeds signed 64-bit range")
    return <long long> value


def clean_binop(int op, long long a, long long b):
    """Exact binary operation on int64 operands; comparisons return 0/1."""
    cdef long long r
    if op == OP_ADD:
        return _checked((<int128> a) + b)
    if op == OP_SUB:
        return _checked((<int128> a) - b)
    if op == OP_MUL:
        return _checked((<int128> a) * b)
    if op == OP_MOD:
        if b == 0:
            raise ZeroDivisionError("modulo by zero")
        if b == -1:
            return 0  # avoids the INT64_MIN % -1 hardware trap
        r = a % b
        if r != 0 and (r < 0) != (b < 0):
            r += b
        return r
    if op == OP_EQ:
        return 1 if a == b else 0
    if op == OP_NEQ:
        return 1 if a != b else 0
    if op == OP_LT:
        return 1 if a < b else 0
    raise ValueError(f"unknown operator code {op}")


def checked_neg(long long a):
    """Arithmetic negation; overflows only for INT64_MIN."""
    return _checked(-(<int128> a))


cdef inline int128 _div_round_half_even(int128 num, long long den):
    # Exact num/den rounded to the nearest integer, ties to even. den > 0.
    cdef int128 q = num / den
    cdef int128 r = num - q * den
    cdef int128 twice
    if r < 0:
        q -= 1
        r += den
    twice = 2 * r
    if twice > <int128> den or (twice == <int128> den and (q & 1)):
        q += 1
    return q


def apply_deviation(int kind, long long clean, long long p_num, long long p_den):
    """Deviated value for a clean result under one deviation model."""
    cdef unsigned long long u
    if kind == DEV_OFFSET:
        return _checked(_div_round_half_even((<int128> clean) * p_den + p_num, p_den))
    if kind == DEV_SCALE:
        return _checked(_div_round_half_even((<int128> clean) * p_num, p_den))
    if kind == DEV_STUCK_AT:
        return p_num
    if kind == DEV_BITFLIP:
        u = (<unsigned long long> clean) ^ ((<unsigned long long> 1) << p_num)
        return <long long> u
    raise ValueError(f"unknown deviation code {kind}")


cdef inline unsigned long long _mix(unsigned long long z):
    z = (z ^ (z >> 30)) * _SM64_MIX1
    z = (z ^ (z >> 27)) * _SM64_MIX2
    return z ^ (z >> 31)


def sm64_next(unsigned long long state):
    """One SplitMix64 step: (new_state, mixed 64-bit output)."""
    state += _SM64_GAMMA
    return state, _mix(state)


def stream_seed(unsigned long long seed, unsigned long long origin_id):
    """Initial draw-stream state for an injection site under a scenario seed."""
    cdef unsigned long long z = _mix(seed + _SM64_GAMMA)
    return _mix((z ^ origin_id) + _SM64_GAMMA)


def stream_child(unsigned long long state, unsigned long long step):
    """Stream state for an infected result; leaves the parent state untouched."""
    cdef unsigned long long z = _mix(state + _SM64_GAMMA)
    return _mix((z ^ step) + _SM64_GAMMA)


def bernoulli(unsigned long long state, double rate):
    """Advance the stream one draw; return (new_state, draw < rate)."""
    state += _SM64_GAMMA
    return state, (_mix(state) >> 11) * _INV_2_53 < rate
