import math
import random
from fractions import Fraction


from lospace.linop import SparseMatrix
from lospace.oracle import oracle_eigs_bisect
from lospace.spectral import (
    NO,
    YES,
    eigendecompose,
    inv_power,
    inv_power_gap,
    perturb_spectrum,
    shift_invert,
    spectrum,
    svd,
)


def sym_random(rnd, n, u=10):
    a = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1):
            a[i][j] = a[j][i] = rnd.randrange(-u, u + 1)
    return a


def test_inv_power_examples():
    lam = inv_power(SparseMatrix.from_dense([[2, 0], [0, 5]]), 0.1, Fraction(1, 100), 0)
    assert math.exp(-0.1) * 2 <= float(lam.to_fraction()) <= math.exp(0.1) * 2
    lam = inv_power(SparseMatrix.from_dense([[1, 1], [1, 1]]), 0.1, Fraction(1, 100), 1)
    assert lam.is_zero()
    lam = inv_power(SparseMatrix.identity(3), 0.1, Fraction(2), 2)
    assert math.exp(-0.1) * 2 <= float(lam.to_fraction()) <= math.exp(0.1) * 2


def test_inv_power_bracketing_vs_oracle():
    rnd = random.Random(5)
    checked = 0
    while checked < 8:
        n = rnd.randrange(1, 6)
        a = sym_random(rnd, n, 6)
        eigs = oracle_eigs_bisect(a, 1e-9)
        lam_min = min(abs(x) for x in eigs)
        if lam_min < 1e-6:
            continue
        checked += 1
        delta = Fraction(1, 1000)
        got = float(inv_power(SparseMatrix.from_dense(a), 0.1, delta, checked).to_fraction())
        want = max(float(delta), lam_min)
        assert math.exp(-0.12) * want <= got <= math.exp(0.12) * want, (a, got, want)


def test_inv_power_gap_examples():
    lam, v = inv_power_gap(SparseMatrix.from_dense([[1, 0], [0, 10]]), 0.01, Fraction(1, 2), 3)
    assert abs(float(lam.to_fraction()) - 1) <= 0.05
    assert abs(float(v[0].to_fraction())) >= 0.99
    assert abs(float(v[1].to_fraction())) <= 0.15

    lam, v = inv_power_gap(SparseMatrix.from_dense([[-7]]), 0.01, Fraction(1), 4)
    assert abs(float(lam.to_fraction()) - 7) <= 0.1
    assert abs(abs(float(v[0].to_fraction())) - 1) <= 0.02

    lam, v = inv_power_gap(SparseMatrix.from_dense([[2, 0], [0, -3]]), 0.01, Fraction(1), 5)
    assert abs(float(lam.to_fraction()) - 2) <= 0.05
    assert abs(float(v[0].to_fraction())) >= 0.99


def test_perturb_properties():
    rnd = random.Random(7)
    a = SparseMatrix.from_dense(sym_random(rnd, 5, 9))
    for eps in (0.5, 0.05):
        b = perturb_spectrum(a, eps, rnd)
        # diagonal-only perturbation, every entry within [0, eps/2]
        assert len(b.diag_scaled) == 5
        for v in b.diag_scaled:
            assert 0 <= Fraction(v, 1 << b.scale_pow) <= Fraction(eps) / 2
        # scaled matrix differs from 2^s A only on the diagonal
        s = b.scale_pow + 2
        m = b.scaled(s)
        dense = m.to_dense()
        ad = a.to_dense()
        for i in range(5):
            for j in range(5):
                if i != j:
                    assert dense[i][j] == ad[i][j] << s


def test_perturb_diagonal_case_shifts_exactly():
    a = SparseMatrix.from_dense([[1, 0], [0, 5]])
    rnd = random.Random(3)
    b = perturb_spectrum(a, 0.25, rnd)
    vals = spectrum(a, 0.2, 11)
    assert abs(float(vals[0]) - 1) <= 0.2 and abs(float(vals[1]) - 5) <= 0.2


def test_shift_invert_examples():
    rnd = random.Random(1)
    b10 = SparseMatrix.from_dense([[10 << 4]])
    assert shift_invert(b10, 4, Fraction(0), Fraction(1), rnd) == NO
    b0 = SparseMatrix.from_dense([[0]])
    assert shift_invert(b0, 0, Fraction(-1), Fraction(1), rnd) == YES
    b3 = SparseMatrix.from_dense([[3 << 8]])
    # [2.8984375, 3.1015625] on the 2^-8 grid straddles the eigenvalue
    lo, hi = Fraction(742, 256), Fraction(794, 256)
    assert shift_invert(b3, 8, lo, hi, rnd) == YES


def test_shift_invert_soundness_random():
    """NO implies no eigenvalue in [lo, hi]; YES implies one in the widened
    interval. Checked against the exact oracle on random instances."""
    rnd = random.Random(13)
    for trial in range(60):
        n = rnd.randrange(1, 5)
        a = sym_random(rnd, n, 5)
        eigs = oracle_eigs_bisect(a, 1e-9)
        s = 6
        width = Fraction(rnd.randrange(1, 40), 8)
        lo = Fraction(rnd.randrange(-12 * 8, 12 * 8), 8)
        hi = lo + width
        lo *= Fraction(1 << s, 1 << s)
        ans = shift_invert(SparseMatrix.from_dense([[v << s for v in row] for row in a]),
                           s, lo, hi, rnd)
        inside = [x for x in eigs if lo - 1e-9 <= x <= float(hi) + 1e-9]
        w = float(width) / 4
        widened = [x for x in eigs if float(lo) - w - 1e-9 <= x <= float(hi) + w + 1e-9]
        if ans == NO:
            strict = [x for x in eigs if float(lo) + 1e-9 < x < float(hi) - 1e-9]
            assert not strict, (a, lo, hi, eigs)
        else:
            assert widened, (a, lo, hi, eigs)


def test_spectrum_examples():
    vals = spectrum(SparseMatrix.from_entries(3, 3, []), 0.1, 0)
    assert len(vals) == 3 and all(abs(float(v)) <= 0.1 for v in vals)

    vals = spectrum(SparseMatrix.from_dense(
        [[1, 0, 0], [0, 3, 0], [0, 0, 5]]), 0.1, 1)
    for got, want in zip(vals, [1, 3, 5]):
        assert abs(float(got) - want) <= 0.1

    vals = spectrum(SparseMatrix.from_dense([[0, 1], [1, 0]]), 0.05, 2)
    assert abs(float(vals[0]) + 1) <= 0.05 and abs(float(vals[1]) - 1) <= 0.05


def test_spectrum_random_and_level_counts():
    rnd = random.Random(17)
    for trial in range(4):
        n = rnd.randrange(2, 7)
        a = sym_random(rnd, n, 8)
        stats = {}
        vals = spectrum(SparseMatrix.from_dense(a), 0.1, trial, stats=stats)
        want = oracle_eigs_bisect(a, 1e-8)
        assert len(vals) == n
        assert all(float(vals[i]) <= float(vals[i + 1]) + 1e-12 for i in range(n - 1))
        for got, w in zip(vals, want):
            assert abs(float(got) - w) <= 0.1
        # eq:level-size-bound: at most 2n internal YES-nodes per level
        assert max(stats.values()) <= 2 * n, stats


def test_eigendecompose_residuals():
    rnd = random.Random(23)
    n = 4
    a = sym_random(rnd, n, 8)
    eps = 0.05
    pairs = list(eigendecompose(SparseMatrix.from_dense(a), eps, 3))
    assert len(pairs) == n
    vs = []
    for lam, v in pairs:
        vf = [float(x.to_fraction()) for x in v]
        vs.append(vf)
        nrm = sum(x * x for x in vf)
        assert 1 - eps <= nrm <= 1 + eps
        av = [sum(a[i][j] * vf[j] for j in range(n)) for i in range(n)]
        res = math.sqrt(sum((x - float(lam) * y) ** 2 for x, y in zip(av, vf)))
        assert res <= eps
    for i in range(n):
        for j in range(i):
            assert abs(sum(x * y for x, y in zip(vs[i], vs[j]))) <= eps
    want = oracle_eigs_bisect(a, 1e-8)
    for (lam, _), w in zip(pairs, want):
        assert abs(float(lam) - w) <= eps


def test_eigendecompose_repeated_eigenvalue():
    pairs = list(eigendecompose(SparseMatrix.from_dense([[7, 0], [0, 7]]), 0.1, 4))
    assert len(pairs) == 2
    inner = sum(float(x.to_fraction()) * float(y.to_fraction())
                for x, y in zip(pairs[0][1], pairs[1][1]))
    assert abs(inner) <= 0.1
    for lam, _ in pairs:
        assert abs(float(lam) - 7) <= 0.1


def test_svd_examples():
    trips = list(svd(SparseMatrix.from_dense([[3, 0], [0, 4]]), 0.05, 5))
    sig = sorted(float(s.to_fraction()) for _, s, _ in trips if s is not None)
    assert abs(sig[0] - 3) <= 0.05 and abs(sig[1] - 4) <= 0.05

    trips = list(svd(SparseMatrix.from_dense([[0], [2]]), 0.05, 6))
    sig = [float(s.to_fraction()) for _, s, _ in trips if s is not None]
    assert len(sig) == 1 and abs(sig[0] - 2) <= 0.05

    trips = list(svd(SparseMatrix.from_entries(2, 2, []), 0.4, 7))
    for _, s, _ in trips:
        if s is not None:
            assert float(s.to_fraction()) <= 0.4


def test_svd_norm_inequalities():
    import numpy as np

    rnd = random.Random(31)
    n, m = 4, 3
    a = [[rnd.randrange(-5, 6) for _ in range(m)] for _ in range(n)]
    eps = 0.05
    trips = list(svd(SparseMatrix.from_dense(a), eps, 8))
    A = np.array(a, dtype=float)
    U = np.array([[float(x.to_fraction()) for x in u] for u, _, _ in trips]).T
    sig = [float(s.to_fraction()) for _, s, _ in trips if s is not None]
    V = np.array([[float(x.to_fraction()) for x in v]
                  for _, s, v in trips if s is not None]).T
    S = np.zeros((n, m))
    for i, s in enumerate(sig):
        S[i, i] = s
    assert np.linalg.norm(U.T @ U - np.eye(n), 2) <= eps
    assert np.linalg.norm(V.T @ V - np.eye(m), 2) <= eps
    assert np.linalg.norm(A @ V - U @ S, 2) <= eps
    assert np.linalg.norm(A.T @ U - V @ S.T, 2) <= eps
