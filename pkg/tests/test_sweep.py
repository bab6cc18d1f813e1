import csv
import io
import json
from fractions import Fraction

import pytest

from dpplimits.analytic import asymptote_large_cv, asymptote_large_n, normalized_loss
from dpplimits.errors import UnsupportedFormat
from dpplimits.loads import Family, LoadDistribution, SystemDimensions
from dpplimits.sweep import (
    CSV_HEADER,
    Axis,
    SweepResult,
    SweepRow,
    SweepSpec,
    default_values,
    emit,
    parse_json,
    run_sweep,
)
from dpplimits.topology import DPP_KINDS, ResourceBudget, TopologyModel

UNIT = ResourceBudget(1.0, 1.0)
CV1 = LoadDistribution(Family.TWO_POINT, 1.0, 1.0)


def test_domains_sweep_ac_series():
    spec = SweepSpec(Axis.DOMAINS_N, [2, 4, 8, 16], SystemDimensions(2, 4), CV1, UNIT, ["ac"], trials=200)
    values = [r.analytic_normalized for r in run_sweep(spec).rows]
    expected = [Fraction(1, 36), Fraction(3, 68), Fraction(7, 132), Fraction(15, 260)]
    assert values == pytest.approx([float(f) for f in expected], rel=1e-15)
    assert all(b > a for a, b in zip(values, values[1:]))
    assert all(v < 0.0625 for v in values)


def test_domains_sweep_monotone_on_consecutive_grid():
    spec = SweepSpec(Axis.DOMAINS_N, range(2, 65), SystemDimensions(2, 4), CV1, UNIT, ["ac"], trials=2)
    values = [r.analytic_normalized for r in run_sweep(spec).rows]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_zero_sigma_sweep():
    spec = SweepSpec(Axis.LOADS_M, [1, 2, 3], dist=LoadDistribution("uniform", 1.0, 0.0), trials=10)
    result = run_sweep(spec)
    assert all(r.analytic_normalized == 0.0 and r.simulated_normalized == 0.0 for r in result.rows)


def test_cv_sweep_large_endpoint():
    spec = SweepSpec(
        Axis.COEFF_VAR, [1.0, 100.0], SystemDimensions(2, 4),
        LoadDistribution(Family.LOGNORMAL, 1.0, 1.0), UNIT, ["ac"], trials=100,
    )
    last = run_sweep(spec).rows[-1]
    assert last.analytic_normalized == pytest.approx(0.25, rel=0.005)


def test_row_order_axis_major():
    spec = SweepSpec(Axis.DOMAINS_N, [2, 3], topologies=["ac", "dc"], trials=10)
    rows = run_sweep(spec).rows
    assert [(r.axis_value, r.topology) for r in rows] == [(2, "ac"), (2, "dc"), (3, "ac"), (3, "dc")]


@pytest.fixture(scope="module")
def small_result():
    spec = SweepSpec(Axis.DOMAINS_N, [2, 3, 4], topologies=["ac", "ladder-bb"], trials=50, seed=3)
    return run_sweep(spec)


def test_csv_cardinality_and_header(small_result):
    text = emit(small_result, "csv").decode()
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_HEADER
    assert rows[0] == "axis,value,topology,analytic,simulated,ci_low,ci_high".split(",")
    assert len(rows) == 7


def test_csv_full_precision(small_result):
    rows = list(csv.DictReader(io.StringIO(emit(small_result, "csv").decode())))
    for row, record in zip(rows, small_result.rows):
        assert float(row["analytic"]) == record.analytic_normalized
        assert float(row["ci_high"]) == record.sim_ci95[1]


def test_json_round_trip(small_result):
    assert parse_json(emit(small_result, "json")) == small_result
    assert json.loads(emit(small_result, "json"))["axis"] == "n"


def test_svg(small_result):
    data = emit(small_result, "SVG")
    assert b"<svg" in data
    assert data == emit(small_result, "svg")


def test_emit_errors(small_result):
    with pytest.raises(ValueError):
        emit(SweepResult(Axis.DOMAINS_N, ()), "csv")
    with pytest.raises(UnsupportedFormat):
        emit(small_result, "xlsx")


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(axis="n", values=[]),
        dict(axis="n", values=[3, 2]),
        dict(axis="n", values=[2, 2]),
        dict(axis="m", values=[1.5, 2]),
        dict(axis="n", values=[0, 1]),
        dict(axis="cv", values=[-0.1, 0.2]),
        dict(axis="cv", values=[0.1], dist=LoadDistribution("uniform", 0.0, 0.0)),
        dict(axis="n", values=[2], topologies=[]),
    ],
)
def test_spec_validation(kwargs):
    with pytest.raises(ValueError):
        SweepSpec(**kwargs)


def test_default_grids():
    assert default_values("n") == tuple(range(2, 17))
    assert default_values("m") == tuple(range(1, 17))
    cv = default_values("cv")
    assert cv[0] == 0.1 and cv[-1] == 2.0 and len(cv) == 20


def test_infeasible_point_propagates():
    from dpplimits.errors import InfeasibleMoments

    spec = SweepSpec(Axis.COEFF_VAR, [0.5, 1.0], dist=LoadDistribution("uniform", 1.0, 0.1), trials=10)
    with pytest.raises(InfeasibleMoments):
        run_sweep(spec)


class TestFigureShapes:
    topologies = [TopologyModel(k) for k in DPP_KINDS]

    def test_vs_n(self):
        dist = LoadDistribution(Family.UNIFORM, 1.0, 0.5)
        spec = SweepSpec(Axis.DOMAINS_N, range(2, 41), SystemDimensions(2, 4), dist, UNIT, self.topologies, trials=2)
        result = run_sweep(spec)
        for name in ("ac", "dc"):
            series = [r.analytic_normalized for r in result.series(name)]
            limit = asymptote_large_n(TopologyModel(name), 4, dist, UNIT)
            assert all(v < limit for v in series)
            assert all(b > a for a, b in zip(series, series[1:]))
        ac = {r.axis_value: r.analytic_normalized for r in result.series("ac")}
        for name in ("ladder-dab", "ladder-bb"):
            series = result.series(name)
            assert all(r.analytic_normalized > ac[r.axis_value] for r in series if r.axis_value >= 3)
            assert all(b.analytic_normalized > a.analytic_normalized for a, b in zip(series, series[1:]))
            far = normalized_loss(TopologyModel(name), SystemDimensions(2000, 4), dist, UNIT)
            assert far > 1.0

    def test_vs_m(self):
        spec = SweepSpec(Axis.LOADS_M, range(1, 17), SystemDimensions(8, 1), trials=2)
        result = run_sweep(spec)
        for topo in self.topologies:
            series = result.series(topo.name)
            assert all(b.analytic_normalized < a.analytic_normalized for a, b in zip(series, series[1:]))
            # approaches c/M: M * value flattens as M grows
            scaled = [r.axis_value * r.analytic_normalized for r in series]
            assert abs(scaled[-1] - scaled[-2]) < abs(scaled[1] - scaled[0])

    def test_vs_cv(self):
        dims = SystemDimensions(8, 4)
        spec = SweepSpec(
            Axis.COEFF_VAR, default_values("cv"), dims, LoadDistribution(Family.LOGNORMAL, 1.0, 1.0), UNIT,
            self.topologies, trials=2,
        )
        result = run_sweep(spec)
        for topo in self.topologies:
            series = [r.analytic_normalized for r in result.series(topo.name)]
            assert all(b > a for a, b in zip(series, series[1:]))
            assert all(v < asymptote_large_cv(topo, dims, UNIT) for v in series)


@pytest.mark.slow
def test_simulated_points_cover_analytic():
    spec = SweepSpec(Axis.DOMAINS_N, default_values("n"), SystemDimensions(2, 4), seed=11)
    result = run_sweep(spec)
    inside = [r.sim_ci95[0] <= r.analytic_normalized <= r.sim_ci95[1] for r in result.rows]
    assert sum(inside) / len(inside) >= 0.90


def test_worker_count_invariant():
    spec = SweepSpec(Axis.DOMAINS_N, [2, 40], SystemDimensions(2, 300), trials=300, seed=2)
    assert emit(run_sweep(spec, workers=1)) == emit(run_sweep(spec, workers=3))
