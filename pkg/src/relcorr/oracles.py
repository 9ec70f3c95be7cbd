"""Brute-force reference functions, deliberately naive and independent of
the interpreter."""

from __future__ import annotations


def oracle_isqrt_ceil(n: int) -> int:
    """Smallest x >= 0 with x*x >= n."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    x = 0
    while x * x < n:
        x += 1
    return x


def oracle_isqrt_floor(n: int) -> int:
    if n < 0:
        raise ValueError("n must be nonnegative")
    x = 0
    while (x + 1) * (x + 1) <= n:
        x += 1
    return x


def oracle_perfect_square(n: int) -> bool:
    if n < 0:
        return False
    x = 0
    while x * x < n:
        x += 1
    return x * x == n


def oracle_mu(n: int, bound: int | None = None) -> int | None:
    """Smallest x whose square exceeds n by a perfect square, if x <= bound."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    limit = bound if bound is not None else n + 1
    for x in range(limit + 1):
        if x * x >= n and oracle_perfect_square(x * x - n):
            return x
    return None


def oracle_fermat_domain(n: int) -> bool:
    return n % 2 == 1 or n % 4 == 0


def char_class(c: str) -> str:
    if "A" <= c <= "Z":
        return "upper"
    if "a" <= c <= "z":
        return "lower"
    if "0" <= c <= "9":
        return "digit"
    return "sym"
