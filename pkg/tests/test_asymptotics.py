import dataclasses
import io
import math

import numpy as np
import pytest

from narrowwindow.asymptotics import (
    CSV_HEADER,
    THREADS_ENV,
    PowerLawFit,
    SweepResult,
    SweepRow,
    default_a_grid,
    fit_rows,
    read_sweep_csv,
    sandwich_report,
    sweep,
    thread_count,
    write_sweep_csv,
)
from narrowwindow.constants import build_chain
from narrowwindow.exceptions import GeometryError, GridMismatchError
from narrowwindow.geometry import Geometry
from narrowwindow.varbound import optimize_trial

A_SMALL = [0.04, 0.04 * math.sqrt(2), 0.08]


@pytest.fixture(scope="module")
def small_sweep():
    return sweep(Geometry(1.0, 0.0, 0.1), A_SMALL, threads=1)


def _upper(result):
    return [(r.a, optimize_trial(Geometry(1.0, 0.0, r.a)).value) for r in result.rows]


def test_default_grid():
    a = default_a_grid()
    assert a.size == 7
    assert a[0] == 0.02
    assert a[-1] == pytest.approx(0.16)
    assert np.allclose(a[1:] / a[:-1], math.sqrt(2))


def test_power_law_fit_recovers_exact_law():
    a = default_a_grid()
    model = PowerLawFit(window="all").fit(a, 3.5 * a**4)
    assert model.slope_ == pytest.approx(4.0, abs=1e-12)
    assert model.coefficient_ == pytest.approx(3.5, rel=1e-12)
    assert model.max_residual_ < 1e-12
    assert model.predict([0.1])[0] == pytest.approx(3.5e-4)


def test_lower_half_window():
    a = default_a_grid()
    gap = 2.0 * a**4 * (1 + 50 * a**2)
    model = PowerLawFit().fit(a, gap)
    assert model.n_points_ == 4
    assert model.window_ == (a[0], a[3])
    full = PowerLawFit(window="all").fit(a, gap)
    assert abs(model.slope_ - 4) < abs(full.slope_ - 4)
    assert model.get_params() == {"window": "lower_half"}


def test_fit_errors():
    with pytest.raises(GeometryError):
        PowerLawFit().fit([0.1, 0.2], [1.0, -1.0])
    with pytest.raises(GeometryError):
        PowerLawFit(window="upper").fit([0.1, 0.2, 0.3], [1.0, 2.0, 3.0])
    with pytest.raises(GeometryError):
        PowerLawFit().fit([0.1, 0.2], [1.0])


def test_sweep_rows_and_quartic_gap(small_sweep):
    assert [r.a for r in small_sweep.rows] == A_SMALL
    assert all(r.usable for r in small_sweep.rows)
    assert small_sweep.conclusive
    assert small_sweep.fit_slope == pytest.approx(4.0, abs=0.05)
    ratios = small_sweep.gaps() / small_sweep.a_values() ** 4
    assert np.all((ratios > 230) & (ratios < 250))


def test_sweep_is_order_independent_of_threads(small_sweep):
    threaded = sweep(Geometry(1.0, 0.0, 0.1), A_SMALL, threads=3)
    assert write_sweep_csv(threaded) == write_sweep_csv(small_sweep)


def test_sweep_rejects_bad_grids():
    g = Geometry(1.0, 0.0, 0.1)
    with pytest.raises(GeometryError):
        sweep(g, [0.1, 0.05])
    with pytest.raises(GeometryError):
        sweep(g, [0.1, 0.5])


def test_thread_env(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "2")
    assert thread_count() == 2
    monkeypatch.setenv(THREADS_ENV, "0")
    assert thread_count() >= 1
    monkeypatch.setenv(THREADS_ENV, "many")
    with pytest.raises(GeometryError):
        thread_count()
    monkeypatch.setenv(THREADS_ENV, "-1")
    with pytest.raises(GeometryError):
        thread_count()


def test_csv_round_trip(small_sweep):
    text = write_sweep_csv(small_sweep, metadata={"version": "x"})
    assert text.splitlines()[0] == "# version=x"
    assert text.splitlines()[1] == ",".join(CSV_HEADER)
    rows = read_sweep_csv(io.StringIO(text))
    assert rows == small_sweep.rows


def test_csv_errors():
    with pytest.raises(GeometryError):
        read_sweep_csv(io.StringIO(""))
    with pytest.raises(GeometryError):
        read_sweep_csv(io.StringIO("a,b\n1,2\n"))
    with pytest.raises(GeometryError):
        read_sweep_csv(io.StringIO(",".join(CSV_HEADER) + "\n1,2\n"))


def test_fit_rows_skips_unusable():
    rows = [SweepRow(0.1, 9.0, 0.1, 8, 0.0), SweepRow(0.2, 9.9, 0.0, 8, 0.0, "no_eigenvalue")]
    result = fit_rows(SweepResult(None, rows))
    assert not result.conclusive
    assert result.notes


def test_sandwich_passes(small_sweep):
    chain = build_chain(1.0, A_SMALL[-1])
    report = sandwich_report(small_sweep, _upper(small_sweep), chain.c1, chain.a_star)
    assert report.status == "pass"
    assert all(r.in_scope for r in report.rows)
    assert report.to_dict()["rows"][0]["gap_ge_trial"]


def test_sandwich_detects_injected_faults(small_sweep):
    chain = build_chain(1.0, A_SMALL[-1])
    upper = _upper(small_sweep)
    for factor in (1e-3, 1e8):
        rows = list(small_sweep.rows)
        rows[1] = dataclasses.replace(rows[1], gap=rows[1].gap * factor)
        broken = fit_rows(SweepResult(None, rows))
        report = sandwich_report(broken, upper, chain.c1, chain.a_star)
        assert report.status == "fail"
        assert [r.passed for r in report.rows] == [True, False, True]


def test_sandwich_inconclusive_out_of_scope(small_sweep):
    chain = build_chain(1.0, A_SMALL[-1])
    report = sandwich_report(small_sweep, _upper(small_sweep), chain.c1, a_star=0.01)
    assert report.status == "inconclusive"
    assert not any(r.in_scope for r in report.rows)


def test_sandwich_grid_mismatch(small_sweep):
    upper = _upper(small_sweep)
    with pytest.raises(GridMismatchError):
        sandwich_report(small_sweep, upper[:-1], 1.0, 1.0)
    shifted = [(a * 1.01, v) for a, v in upper]
    with pytest.raises(GridMismatchError):
        sandwich_report(small_sweep, shifted, 1.0, 1.0)


def test_neighbour_ratio_and_monotonicity(small_sweep):
    gaps = small_sweep.gaps()
    assert np.all(np.diff(gaps) > 0)
    # neighbours a, a sqrt(2): factor (sqrt 2)^4 = 4 under the quartic law
    assert gaps[1] / gaps[0] == pytest.approx(4.0, rel=0.02)
    assert small_sweep.fit_max_residual < 0.05


def test_doubling_gaps_violates_nothing(small_sweep):
    # gap >= |trial| only gets easier and c1 a^4 is ~5000 times the gap,
    # so a doubled gap column must still pass with no row flagged
    chain = build_chain(1.0, A_SMALL[-1])
    rows = [dataclasses.replace(r, gap=2 * r.gap) for r in small_sweep.rows]
    report = sandwich_report(fit_rows(SweepResult(None, rows)), _upper(small_sweep),
                             chain.c1, chain.a_star)
    assert report.status == "pass"


def test_fault_flags_name_the_violated_side(small_sweep):
    chain = build_chain(1.0, A_SMALL[-1])
    upper = _upper(small_sweep)
    rows = list(small_sweep.rows)
    rows[0] = dataclasses.replace(rows[0], gap=rows[0].gap * 1e-3)
    rows[2] = dataclasses.replace(rows[2], gap=rows[2].gap * 1e8)
    report = sandwich_report(fit_rows(SweepResult(None, rows)), upper, chain.c1, chain.a_star)
    flags = [(r.variational_ok, r.chain_ok) for r in report.rows]
    assert flags == [(False, True), (True, True), (True, False)]


@pytest.mark.slow
def test_nonsymmetric_sweep_slope():
    result = sweep(Geometry(1.0, 0.5, 0.1), default_a_grid())
    assert result.fit_slope == pytest.approx(4.0, abs=0.1)
    assert np.all(np.diff(result.gaps()) > 0)
