"""Acceptance checks shared by the test suite and ``berkson-kde selftest``.

Each check returns a :class:`CriterionResult` plus a deterministic text
artifact of what it computed, so runs under different thread counts can be
compared byte for byte.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .bandwidth import (
    diagonal_qp,
    full_bandwidth_matrices,
    optimal_scalar_bandwidth,
    rule_of_thumb_hy,
    rule_of_thumb_hy_gaussian,
)
from .experiments import (
    ERROR_VARIANCES,
    REFERENCE_TABLES,
    get_density,
    reference_ratio,
    ratio_curve,
    ratio_table,
)
from .gaussmix import GaussianMixture, make_rng
from .mise_exact import exact_mise
from .model import BerksonModel
from .montecarlo import monte_carlo_ise
from .spectral import fourier_mise
from ._parallel import parallel_map

SEED = 20240611
RAW_TOL = 0.005


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    detail: str
    seconds: float
    limit: Optional[float] = None
    artifact: str = field(default="", repr=False)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        limit = f" (limit {self.limit:g} s)" if self.limit else ""
        return f"[{status}] criterion {self.number}: {self.title} - {self.detail} [{self.seconds:.2f} s{limit}]"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _table_check(tables: list[str], threads):
    lines, failures = [], []
    for table in tables:
        spec = REFERENCE_TABLES[table]
        cells = ratio_table(list(spec["cells"]), ERROR_VARIANCES, spec["n"], threads=threads)
        for c in cells:
            want = reference_ratio(table, c.density, c.sigma_eps2)
            got = (c.ratio_zero, c.ratio_hx)
            ok = c.display() == want and all(abs(g - w) <= RAW_TOL for g, w in zip(got, want))
            if not ok:
                failures.append(f"{table}/{c.density}/{c.sigma_eps2:g}: {got[0]:.4f},{got[1]:.4f} vs {want}")
            lines.append(",".join([table, c.density, _fmt(c.sigma_eps2), _fmt(c.h_y), _fmt(c.h_x),
                                   _fmt(c.ratio_zero), _fmt(c.ratio_hx)]))
    total = len(lines)
    detail = f"{total - len(failures)}/{total} cells match" + (f"; mismatches: {failures[:4]}" if failures else "")
    return not failures, detail, "\n".join(lines) + "\n"


def criterion_1(threads=None):
    return _table_check(["1d-n50"], threads)


def criterion_2(threads=None):
    return _table_check(["1d-n100"], threads)


def criterion_3(threads=None):
    return _table_check(["3d-n100", "3d-n500"], threads)


def criterion_4(threads=None):
    model = BerksonModel.isotropic(get_density("normal").mixture, 2.0)
    h_y = optimal_scalar_bandwidth(model, 50, "Y").value
    h_x = optimal_scalar_bandwidth(model, 50, "X").value
    ok = abs(h_y - 0.26) <= 0.005 and abs(h_x - 0.52) <= 0.005
    return ok, f"h_Y = {h_y:.5f}, h_X = {h_x:.5f}", f"{_fmt(h_y)},{_fmt(h_x)}\n"


def random_1d_configuration(index: int, seed: int = SEED):
    """Random (model, h, n) drawn from stream ``index``."""
    rng = make_rng(seed, index)
    m = int(rng.integers(1, 4))
    weights = rng.dirichlet(np.ones(m))
    weights = np.maximum(weights, 0.02)
    weights = weights / weights.sum()
    means = rng.uniform(-3.0, 3.0, m)
    variances = rng.uniform(0.2, 2.0, m)
    mix = GaussianMixture.from_arrays(weights, means[:, None], variances)
    model = BerksonModel.isotropic(mix, float(rng.uniform(0.05, 2.0)))
    h = float(rng.uniform(0.0, 1.0))
    n = int(round(10 ** rng.uniform(1.0, 4.0)))
    return model, h, n


def criterion_5(threads=None, count: int = 200):
    def one(i):
        model, h, n = random_1d_configuration(i)
        exact = exact_mise(model, h, n)
        return exact, fourier_mise(model, h, n)

    pairs = parallel_map(one, range(count), threads)
    rel = np.array([abs(f - e) / e for e, f in pairs])
    worst = float(rel.max())
    art = "".join(f"{_fmt(e)},{_fmt(f)}\n" for e, f in pairs)
    return worst <= 1e-6, f"max relative difference {worst:.2e} over {count} configurations", art


MC_CONFIGS = (
    ("normal", 1.0, "zero"),
    ("normal", 1.0, "hY"),
    ("normal", 0.125, "hY"),
    ("bimodal-1", 0.125, "zero"),
    ("bimodal-1", 1.0, "hY"),
)


def criterion_6(threads=None, replicates: int = 400, n: int = 50):
    lines, notes, ok = [], [], True
    for k, (name, s2, rule) in enumerate(MC_CONFIGS):
        model = BerksonModel.isotropic(get_density(name).mixture, s2)
        h = 0.0 if rule == "zero" else float(optimal_scalar_bandwidth(model, n, "Y").value)
        exact = exact_mise(model, h, n)
        mean, se = monte_carlo_ise(model, n, replicates, h, seed=SEED + k, threads=threads)
        z = (mean - exact) / se
        ok &= abs(z) <= 3.0
        notes.append(f"{name}/{s2:g}/{rule}: z={z:+.2f}")
        lines.append(",".join([name, _fmt(s2), _fmt(h), _fmt(exact), _fmt(mean), _fmt(se)]))
    return ok, "; ".join(notes), "\n".join(lines) + "\n"


def criterion_7(threads=None):
    points = ratio_curve(get_density("normal"), ERROR_VARIANCES, [100], threads=threads)
    ratios = [p.ratio for p in points]
    near = all(abs(r - 1.0) <= 0.10 for r, s in zip(ratios, ERROR_VARIANCES) if s >= 0.5)
    monotone = all(a > b for a, b in zip(ratios, ratios[1:]))
    detail = "ratios " + ", ".join(f"{s:g}:{r:.4f}" for s, r in zip(ERROR_VARIANCES, ratios))
    return near and monotone, detail, "".join(f"{_fmt(r)}\n" for r in ratios)


def criterion_8(threads=None):
    worst = 0.0
    for s2 in (0.006, 0.06, 0.6, 1.0, 2.0):
        for n in (50, 231):
            q = rule_of_thumb_hy(1.0, s2, n)
            c = rule_of_thumb_hy_gaussian(1.0, s2, n)
            worst = max(worst, abs(q - c) / c)
    return worst <= 1e-6, f"max relative difference {worst:.2e}", f"{_fmt(worst)}\n"


def criterion_9(threads=None):
    fx = GaussianMixture.normal([0.0, 0.0], np.eye(2))
    form = full_bandwidth_matrices(BerksonModel(fx, np.diag([1.0, 0.25])))
    sv = np.linalg.svd(form.B, compute_uv=False)
    rel = float(sv[-1] / sv[0])
    s_star, unconstrained = diagonal_qp(BerksonModel(fx, np.diag([1.0, 0.01])), 50)
    ok_a = rel <= 1e-12
    ok_b = unconstrained[0] < 0 and s_star[0] == 0.0 and s_star[1] > 0
    detail = (f"(a) smallest/largest singular value {rel:.1e}; (b) unconstrained s = "
              f"({unconstrained[0]:.3f}, {unconstrained[1]:.3f}), constrained s* = ({s_star[0]:g}, {s_star[1]:.3f})")
    return ok_a and ok_b, detail, f"{_fmt(rel)},{_fmt(s_star[1])}\n"


LIMITS = {1: 10.0, 2: 10.0, 3: 60.0, 5: 30.0, 6: 120.0}

CRITERIA: dict[int, tuple[str, Callable]] = {
    1: ("1-D ratio table, n=50", criterion_1),
    2: ("1-D ratio table, n=100", criterion_2),
    3: ("3-D ratio tables, n=100 and n=500", criterion_3),
    4: ("bandwidth spot values h_Y, h_X", criterion_4),
    5: ("Fourier vs exact MISE oracle", criterion_5),
    6: ("Monte Carlo ISE consistency", criterion_6),
    7: ("exact vs asymptotic bandwidth ratio", criterion_7),
    8: ("rule-of-thumb quadrature vs closed form", criterion_8),
    9: ("bandwidth-matrix properties", criterion_9),
}


def run_criterion(number: int, threads=None) -> CriterionResult:
    if number == 10:
        return criterion_10()
    title, fn = CRITERIA[number]
    start = time.perf_counter()
    ok, detail, artifact = fn(threads=threads)
    elapsed = time.perf_counter() - start
    limit = LIMITS.get(number)
    if limit is not None and elapsed >= limit:
        ok = False
        detail += f"; runtime {elapsed:.1f} s exceeds {limit:g} s"
    return CriterionResult(number, title, bool(ok), detail, elapsed, limit, artifact)


def criterion_10(thread_counts=(1, 4), directory=None) -> CriterionResult:
    """Rerun criteria 1-6 under different thread counts and compare output files byte for byte."""
    import pathlib
    import tempfile

    start = time.perf_counter()
    with tempfile.TemporaryDirectory() as tmp:
        root = pathlib.Path(directory or tmp)
        digests = {}
        for t in thread_counts:
            for number in range(1, 7):
                _, fn = CRITERIA[number]
                _, _, artifact = fn(threads=t)
                path = root / f"threads{t}" / f"criterion{number}.csv"
                path.parent.mkdir(parents=True, exist_ok=True)
                path.write_text(artifact)
                digests.setdefault(number, []).append(path.read_bytes())
    differing = [k for k, blobs in digests.items() if any(b != blobs[0] for b in blobs)]
    ok = not differing
    detail = (f"criteria 1-6 byte-identical across threads {list(thread_counts)}" if ok
              else f"outputs differ for criteria {differing}")
    return CriterionResult(10, "determinism across thread counts", ok, detail, time.perf_counter() - start)


def run_all(numbers=None, threads=None, echo: Callable[[str], None] = print) -> list[CriterionResult]:
    results = []
    for k in numbers or list(CRITERIA) + [10]:
        r = run_criterion(k, threads)
        echo(r.line())
        results.append(r)
    return results
