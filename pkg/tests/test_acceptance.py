"""End-to-end acceptance gate.

Each test covers one numbered criterion and prints a single
``ACCEPTANCE <n> <label>: PASS|FAIL`` line on the real terminal, so the
run log shows the verdict table regardless of capture settings.
"""

import time

import numpy as np
import pytest

from tracelab import fem, linalg
from tracelab.cli import parse_config, run
from tracelab.identities import (
    check_decomposition,
    check_permutation,
    check_resolvent_identities,
    check_tb_adjoint,
    check_tb_pinv,
    random_operator,
)
from tracelab.inequalities import InequalityLab
from tracelab.operators import op_norm, penrose_residuals, resolvent_power, weighted_svd

PERMUTATION_S = (-1.0, 0.25, 0.5, 0.75, 1.0, 2.0)
TEST_MESHES = (("square", 0), ("square", 1), ("square", 2),
               ("lshape", 0), ("lshape", 1), ("lshape", 2),
               ("ngon:16", 1))


@pytest.fixture(scope="session", autouse=True)
def kernel_warmup():
    # compile the jit kernels before anything is timed
    linalg.sym_eig(np.array([[2.0, 1.0], [1.0, 2.0]]))
    linalg.cholesky(np.array([[4.0, 2.0], [2.0, 3.0]]))


@pytest.fixture(scope="session")
def random_pairs():
    rng = np.random.default_rng(20260814)
    pairs = []
    start = time.perf_counter()
    for trial in range(100):
        dim_dom, dim_cod = (int(v) for v in rng.integers(2, 51, 2))
        rank = int(rng.integers(1, min(dim_dom, dim_cod) + 1))
        pairs.append(random_operator(42000 + trial, dim_dom, dim_cod, rank))
    return pairs, time.perf_counter() - start


@pytest.fixture(scope="session")
def fem_pairs():
    out = {}
    for domain, refine in (("square", 1), ("square", 2), ("lshape", 1), ("lshape", 2)):
        out[domain, refine] = fem.trace_pair(fem.assemble(fem.build_mesh(domain, refine)))
    return out


@pytest.fixture
def verdict(capsys):
    def emit(number, label, ok):
        with capsys.disabled():
            print(f"\nACCEPTANCE {number} {label}: {'PASS' if ok else 'FAIL'}")
        assert ok, f"criterion {number} ({label}) failed"
    return emit


def test_acceptance_01_penrose_suite(random_pairs, verdict):
    pairs, build_seconds = random_pairs
    start = time.perf_counter()
    worst = max(max(penrose_residuals(a, b).values()) for a, b in pairs)
    elapsed = build_seconds + (time.perf_counter() - start)
    verdict(1, "penrose residuals on 100 weighted pairs",
            worst <= 1e-10 and elapsed <= 10.0)


def test_acceptance_02_resolvent_identities(random_pairs, verdict):
    pairs, _ = random_pairs
    worst = 0.0
    for a, b in pairs:
        for report in check_resolvent_identities(a, b):
            worst = max(worst, report.residual)
            if not report.passed:
                worst = np.inf
    verdict(2, "resolvent identity residuals", worst <= 1e-9)


def test_acceptance_03_permutation_equality(random_pairs, fem_pairs, verdict):
    pairs, _ = random_pairs
    worst = 0.0
    for a, b in pairs[::10]:
        for report in check_permutation(a, b, PERMUTATION_S):
            worst = max(worst, report.residual)
    for gamma, lam in fem_pairs.values():
        for report in check_permutation(gamma, lam, PERMUTATION_S,
                                        rank_rtol=fem.FEM_RANK_RTOL):
            worst = max(worst, report.residual)
    verdict(3, "permutation equality with spectral oracle", worst <= 1e-9)


def test_acceptance_04_decomposition_and_tb(random_pairs, verdict):
    pairs, _ = random_pairs
    worst_identity = 0.0
    worst_adjoint = 0.0
    for a, b in pairs:
        worst_identity = max(worst_identity,
                             check_tb_pinv(a, b).residual,
                             check_decomposition(a, b).residual)
        worst_adjoint = max(worst_adjoint, check_tb_adjoint(a, b).residual)
    verdict(4, "decomposition and T_B lemmas",
            worst_identity <= 1e-9 and worst_adjoint <= 1e-10)


def test_acceptance_05_trace_spectrum(verdict):
    start = time.perf_counter()
    ok = True
    for domain, refine in TEST_MESHES:
        mats = fem.assemble(fem.build_mesh(domain, refine))
        spaces = fem.spaces_and_trace(mats)
        norm = op_norm(spaces.gamma)
        ones = np.ones(mats.K.shape[0])
        attained = (np.sqrt(ones @ mats.T.T @ mats.Mb @ mats.T @ ones)
                    / np.sqrt(ones @ spaces.h1.gram @ ones))
        system = fem.steklov(mats)
        sv = weighted_svd(spaces.gamma)
        stek_vs_svd = np.max(np.abs(np.sort(system.sigmas) - np.sort(sv.values)))
        ok = ok and abs(norm - 1.0) <= 1e-10
        ok = ok and abs(attained - norm) <= 1e-10
        ok = ok and stek_vs_svd <= 1e-9
    disk = fem.steklov(fem.assemble(fem.build_mesh("ngon:64", 2)))
    rel = np.abs(disk.lambdas[1:6] - np.array([1.0, 1.0, 2.0, 2.0, 3.0])) \
        / np.array([1.0, 1.0, 2.0, 2.0, 3.0])
    ok = ok and np.max(rel) <= 0.05
    ok = ok and (time.perf_counter() - start) <= 60.0
    verdict(5, "trace spectrum and disk Steklov oracle", ok)


def test_acceptance_06_trace_equivalence_constants(verdict):
    ok = True
    for domain, refine in TEST_MESHES:
        row = InequalityLab(domain, refine).trace_equivalence_constants(0.0)
        ok = ok and abs(row.c_low - 1.0) <= 1e-10 and abs(row.c_high - 1.0) <= 1e-10
    for domain in ("square", "lshape"):
        ratios = {}
        for refine in (1, 2):
            lab = InequalityLab(domain, refine)
            for s in (0.25, 0.5, 0.75, 1.0):
                row = lab.trace_equivalence_constants(s)
                ok = ok and 0.0 < row.c_low <= row.c_high < np.inf
                ratios[s, refine] = row.c_high / row.c_low
        for s in (0.25, 0.5, 0.75, 1.0):
            drift = ratios[s, 2] / ratios[s, 1]
            ok = ok and 0.5 < drift < 2.0
    verdict(6, "trace equivalence constants", ok)


def test_acceptance_07_harmonic_inequality_band(verdict):
    worst = -np.inf
    for domain, refine in TEST_MESHES:
        lab = InequalityLab(domain, refine)
        for s in (1.05, 1.25, 1.45):
            worst = max(worst, lab.harmonic_inequality_check(s, "graph").worst_violation)
    verdict(7, "harmonic inequality 1<s<3/2 in graph mode", worst <= 1e-9)


def test_acceptance_08_unit_sandwich(verdict):
    ok = True
    for domain in ("square", "lshape"):
        lab = InequalityLab(domain, 2)
        row = lab.bergman_sandwich()
        ok = ok and row.worst_violation <= 1e-9
        ok = ok and lab.bergman_middle_identity_gap() <= 1e-9
        # the constants are the extreme restricted singular values; verify the
        # extremes are attained by actual vectors via the Rayleigh quotient
        po = lab.poisson
        basis = lab.harmonic
        image = lab.bergman_tb[1].matrix @ basis
        restricted = image.T @ po.e1.codomain.gram @ image
        gram = basis.T @ po.e1.domain.gram @ basis
        eig = linalg.gen_sym_eig(0.5 * (restricted + restricted.T),
                                 0.5 * (gram + gram.T))
        for idx, bound in ((0, row.c_low), (-1, row.c_high)):
            w = eig.vectors[:, idx]
            ratio = np.sqrt((w @ restricted @ w) / (w @ gram @ w))
            ok = ok and abs(ratio - bound) <= 1e-9
    verdict(8, "s=1 sandwich with tight constants", ok)


def test_acceptance_09_interpolation_scan(verdict):
    lab = InequalityLab("square", 2)
    grid = tuple(round(0.1 * k, 1) for k in range(11))
    rows = lab.interpolation_scan(grid)
    sandwich = lab.bergman_sandwich()
    ok = abs(rows[0].c_low - 1.0) <= 1e-10 and abs(rows[0].c_high - 1.0) <= 1e-10
    ok = ok and abs(rows[-1].c_low - sandwich.c_low) <= 1e-9
    ok = ok and abs(rows[-1].c_high - sandwich.c_high) <= 1e-9
    low_floor = min(rows[0].c_low, rows[-1].c_low) - 1e-9
    high_ceil = max(rows[0].c_high, rows[-1].c_high) + 1e-9
    for row in rows:
        ok = ok and row.c_low >= low_floor and row.c_high <= high_ceil
    verdict(9, "interpolation scan endpoints and bounds", ok)


def test_acceptance_10_determinism(tmp_path, verdict):
    ok = True
    for command, name in (("verify-identities", "identities.csv"),
                          ("constants", "constants.csv")):
        outputs = []
        for tag in ("a", "b"):
            out = tmp_path / f"{command}-{tag}"
            config = parse_config(
                f"command = {command}\nseed = 6\ndims = 6x5\ntrials = 3\n"
                "domain = square\nrefine = 1\ns = 0,0.5,1\nmode = both\n"
                if command == "constants" else
                f"command = {command}\nseed = 6\ndims = 6x5\ntrials = 3\ns = 0.5,2\n",
                {"out": str(out)})
            ok = ok and run(config) == 0
            outputs.append((out / name).read_bytes())
        ok = ok and outputs[0] == outputs[1]
    verdict(10, "byte-identical reruns", ok)
