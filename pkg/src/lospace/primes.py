"""Randomized primality testing, uniform prime sampling, and CRT.

Sampling draws uniform integers from [n, n^2] and rejects non-primes and
repeats; conditioned on success the output is a uniform k-subset of the
primes in the range.  The per-prime rejection budget comes from the prime
density bound 1/(8*log2 n) for n >= 16, so the failure probability of a
whole sample_primes call is at most n^-c for the configured c.

CRT reconstruction is incremental (Garner style): only the running product
and remainder are live, never the full residue table.
"""

from __future__ import annotations

import math
import random

from . import meter

PRIME = "PRIME"
COMPOSITE = "COMPOSITE"

# product of the odd primes below 512; a single gcd rejects most composites
_SMALL_PRIMES = []


def _small_primes():
    if not _SMALL_PRIMES:
        sieve = bytearray([1]) * 512
        sieve[0:2] = b"\x00\x00"
        for i in range(2, 23):
            if sieve[i]:
                sieve[i * i:: i] = b"\x00" * len(sieve[i * i:: i])
        _SMALL_PRIMES.extend(i for i in range(2, 512) if sieve[i])
    return _SMALL_PRIMES


_PRIMORIAL = None


def _primorial():
    global _PRIMORIAL
    if _PRIMORIAL is None:
        acc = 1
        for q in _small_primes():
            if q > 2:
                acc *= q
        _PRIMORIAL = acc
    return _PRIMORIAL


class SamplingExhausted(RuntimeError):
    """The rejection budget ran out; the n^-c failure branch was hit."""


class DuplicatePrime(ValueError):
    pass


def test_prime(x: int, rounds: int = 40, rng: random.Random | None = None) -> str:
    """Miller-Rabin: PRIME for every prime; composites escape w.p. <= 4^-rounds."""
    if x < 2:
        raise ValueError("test_prime wants x >= 2")
    if x < 512:
        return PRIME if x in _small_primes() else COMPOSITE
    if x & 1 == 0:
        return COMPOSITE
    rng = rng or random.Random()
    d = x - 1
    r = 0
    while d & 1 == 0:
        d >>= 1
        r += 1
    for _ in range(rounds):
        a = rng.randrange(2, x - 1)
        y = pow(a, d, x)
        if y == 1 or y == x - 1:
            continue
        for _ in range(r - 1):
            y = y * y % x
            if y == x - 1:
                break
        else:
            return COMPOSITE
    return PRIME


def _looks_prime(x, rounds, rng):
    if x < 512:
        return x in _small_primes()
    if x & 1 == 0 or math.gcd(x, _primorial()) > 1:
        return False
    return test_prime(x, rounds, rng) == PRIME


def sample_primes(k: int, n: int, rng: random.Random, c: int = 2,
                  rounds: int = 40) -> list[int]:
    """k distinct primes drawn uniformly from [n, n^2]; see module docstring."""
    if n < 16:
        raise ValueError("sample_primes wants n >= 16")
    if not 1 <= k <= n:
        raise ValueError("k must lie in [1, n]")
    budget = math.ceil(8 * (c + 2) * math.log2(n) ** 2)
    seen = set()
    out = []
    m = meter.current()
    tok = m.alloc("primes.sample", 0)
    try:
        for _ in range(k):
            for _attempt in range(budget):
                x = rng.randrange(n, n * n + 1)
                if x in seen:
                    continue
                if _looks_prime(x, rounds, rng):
                    seen.add(x)
                    out.append(x)
                    m.resize(tok, 2 * sum(v.bit_length() + 1 for v in out))
                    break
            else:
                raise SamplingExhausted(
                    f"no new prime in [{n}, {n * n}] after {budget} draws")
    finally:
        m.free(tok)
    return out


def sample_primes_until(n: int, rng: random.Random, stop, c: int = 2,
                        rounds: int = 40, limit: int | None = None) -> list[int]:
    """Draw distinct primes from [n, n^2] until stop(primes) says done.

    Same sequential procedure as sample_primes, just with a data-dependent
    count; used where the needed modulus product depends on the primes
    actually drawn.
    """
    if n < 16:
        raise ValueError("sample_primes_until wants n >= 16")
    budget = math.ceil(8 * (c + 2) * math.log2(n) ** 2)
    seen = set()
    out = []
    cap = limit if limit is not None else n
    while not stop(out):
        if len(out) >= cap:
            break
        for _attempt in range(budget):
            x = rng.randrange(n, n * n + 1)
            if x in seen:
                continue
            if _looks_prime(x, rounds, rng):
                seen.add(x)
                out.append(x)
                break
        else:
            raise SamplingExhausted(
                f"no new prime in [{n}, {n * n}] after {budget} draws")
    return out


class PrimePool:
    """Deterministic lazily-extended streams of distinct primes per range.

    The stream for lower bound m is seeded from m alone, so any two runs
    (or two callers in one run) see the same primes.  Reusing primes is
    sound wherever the per-prime work is certificate-checked: a residue
    computed mod any prime is a valid CRT input.
    """

    def __init__(self):
        self._streams = {}

    def get(self, lower: int, count: int, rounds: int = 40) -> list[int]:
        import hashlib

        # snap to a power of two so nearby ranges share one stream
        lower = max(16, 1 << (lower - 1).bit_length())
        st = self._streams.get(lower)
        if st is None:
            seed = int.from_bytes(
                hashlib.sha256(f"lospace.primepool|{lower}".encode()).digest()[:16],
                "big")
            st = {"rng": random.Random(seed), "primes": [], "seen": set()}
            self._streams[lower] = st
        budget = math.ceil(8 * 4 * math.log2(max(16, lower)) ** 2)
        while len(st["primes"]) < count:
            for _attempt in range(budget):
                x = st["rng"].randrange(lower, lower * lower + 1)
                if x in st["seen"]:
                    continue
                if _looks_prime(x, rounds, st["rng"]):
                    st["seen"].add(x)
                    st["primes"].append(x)
                    break
            else:
                raise SamplingExhausted(
                    f"no new prime in [{lower}, {lower ** 2}] after {budget} draws")
        return st["primes"][:count]


shared_pool = PrimePool()


def crt_combine(pairs) -> tuple[int, int]:
    """Fold residue/prime pairs into (P, R) with R = x mod P, P = prod p_i.

    Incremental Garner reconstruction: after step i the only live state is
    (P, R) of the first i moduli.
    """
    P, R = 1, 0
    seen = set()
    m = meter.current()
    tok = m.alloc("crt.state", 2)
    try:
        for p, r in pairs:
            if p in seen:
                raise DuplicatePrime(f"modulus {p} repeated")
            seen.add(p)
            if not 0 <= r < p:
                raise ValueError("residue out of range")
            # R' = R + P * ((r - R)/P mod p) matches both congruences
            t = (r - R) * pow(P, -1, p) % p
            R = R + P * t
            P = P * p
            m.resize(tok, 2 * (P.bit_length() + R.bit_length() + 2))
    finally:
        m.free(tok)
    return P, R
