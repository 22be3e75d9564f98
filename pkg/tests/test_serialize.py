import csv
import json
import math
import shutil

import numpy as np
import pytest

from conftest import SCENARIOS, tiny1
from warming_market.auction import Status, price_table
from warming_market.scenario import Scenario, SweepRecord, run_auction, sweep_first_constrained_year
from warming_market.serialize import (
    RunManifest,
    ScenarioError,
    emit_results,
    load_scenario,
    read_price_table,
    read_stored_result,
    read_sweep_csv,
    save_scenario,
    scenario_inputs,
)


def copy_tiny1(tmp_path):
    for name in ("tiny1.scenario", "tiny1_kernels.csv", "tiny1_bids.csv"):
        shutil.copy(SCENARIOS / name, tmp_path / name)
    return tmp_path / "tiny1.scenario"


def test_fixture_is_tiny1(tiny1_path):
    s = load_scenario(tiny1_path)
    m = s.model()
    ref = tiny1()
    assert m.bids == ref.bids
    assert m.config == ref.config
    np.testing.assert_array_equal(m.W, ref.W)
    assert s.label == "tiny1"


def test_missing_kernel_names_id(tmp_path):
    path = copy_tiny1(tmp_path)
    (tmp_path / "tiny1_kernels.csv").write_text("kernel_id,lag,value_milliC_per_unit\ndE,0,1.0\n")
    with pytest.raises(ScenarioError, match="'dS'") as exc:
        load_scenario(path)
    assert "line" in str(exc.value) and "dangling" in str(exc.value)


def test_missing_kernel_file(tmp_path):
    path = copy_tiny1(tmp_path)
    (tmp_path / "tiny1_kernels.csv").unlink()
    with pytest.raises(ScenarioError, match="kernels"):
        load_scenario(path)


def test_cap_schedule_missing_period(tmp_path):
    path = copy_tiny1(tmp_path)
    text = path.read_text().replace("value: 0.0 ", "values: {1: 0.0, 3: 0.0} ")
    path.write_text(text)
    with pytest.raises(ScenarioError, match=r"period\(s\) \[2\]") as exc:
        load_scenario(path)
    assert "line 12" in str(exc.value) and "caps.values" in str(exc.value)


@pytest.mark.parametrize(
    "old, new, field",
    [
        ("kind: emission", "kind: pollutant", "activities.0.kind"),
        ("periods_per_year: 1", "periods_per_year: 0", "calendar.periods_per_year"),
        ("first_constrained_year: 1", "first_constrained_year: 9", "caps.first_constrained_year"),
        ("burdens: {}", "burdens: {E: lots}", "burdens.E"),
        ("label: tiny1", "label: [tiny1", "<root>"),
    ],
)
def test_validation_errors_name_field(tmp_path, old, new, field):
    path = copy_tiny1(tmp_path)
    path.write_text(path.read_text().replace(old, new))
    with pytest.raises(ScenarioError) as exc:
        load_scenario(path)
    if field != "<root>":
        assert f"field '{field}'" in str(exc.value) and "line" in str(exc.value)
    else:
        assert "parse error" in str(exc.value)


def test_bad_bid_row(tmp_path):
    path = copy_tiny1(tmp_path)
    with open(tmp_path / "tiny1_bids.csv", "a") as fh:
        fh.write("x,E,9,1.0,1.0\n")
    with pytest.raises(ScenarioError, match="horizon"):
        load_scenario(path)


def test_missing_file():
    with pytest.raises(ScenarioError):
        load_scenario("/nonexistent/x.scenario")


def test_save_load_round_trip(tmp_path, tiny1_path):
    s = load_scenario(tiny1_path)
    path = save_scenario(s, tmp_path, "copy")
    assert load_scenario(path) == s


def test_save_load_explicit_caps(tmp_path, tiny1_path):
    s = load_scenario(tiny1_path)
    from warming_market.auction import CapSchedule
    import dataclasses

    s2 = dataclasses.replace(s, config=dataclasses.replace(s.config, cap_schedule=CapSchedule(2, 3, {2: 1.5, 3: math.inf})))
    back = load_scenario(save_scenario(s2, tmp_path, "caps"))
    assert back.config.cap_schedule == s2.config.cap_schedule


def test_scenario_inputs(tiny1_path):
    names = [p.name for p in scenario_inputs(tiny1_path)]
    assert names == ["tiny1.scenario", "tiny1_kernels.csv", "tiny1_bids.csv"]


class TestEmit:
    def run(self, tiny1_path):
        s = load_scenario(tiny1_path)
        return s, run_auction(s)

    def test_tiny1_outputs(self, tmp_path, tiny1_path):
        s, run = self.run(tiny1_path)
        files = emit_results(tmp_path, run=run)
        names = {p.name for p in files}
        assert {"prices.csv", "allocations.csv", "trajectory.csv", "cap_duals.csv", "summary.json"} <= names
        table = read_price_table(tmp_path / "prices.csv")
        assert table.periods == (1, 2, 3) and table.activities == ("E", "S")
        assert table.get(2, "S") == pytest.approx(-10.0)

    def test_price_round_trip_exact(self, tmp_path, tiny1_path):
        s, run = self.run(tiny1_path)
        for flag in (False, True):
            emit_results(tmp_path, run=run, display_sign=flag)
            assert read_price_table(tmp_path / "prices.csv") == price_table(run.result, [1, 2, 3], ["E", "S"], flag)

    def test_header_comment_documents_sign(self, tmp_path, tiny1_path):
        s, run = self.run(tiny1_path)
        emit_results(tmp_path, run=run, display_sign=True)
        first = (tmp_path / "prices.csv").read_text().splitlines()[0]
        assert first.startswith("#") and "display_sign=1" in first

    def test_stored_result_reloads(self, tmp_path, tiny1_path):
        s, run = self.run(tiny1_path)
        emit_results(tmp_path, run=run, display_sign=True)
        back = read_stored_result(tmp_path)
        assert back.q == run.result.q and back.prices == run.result.prices
        assert back.cap_duals == run.result.cap_duals

    def test_empty_sweep_header_only(self, tmp_path):
        emit_results(tmp_path, sweep=[])
        assert (tmp_path / "sweep.csv").read_text() == "Y,status,objective,revenue_net,revenue_eq6\n"
        assert read_sweep_csv(tmp_path / "sweep.csv") == []

    def test_sweep_round_trip(self, tmp_path):
        from test_scenario import stock_scenario

        recs = sweep_first_constrained_year(stock_scenario(), [2000, 2001, 2002, 2003])
        emit_results(tmp_path, sweep=recs)
        back = read_sweep_csv(tmp_path / "sweep.csv")
        for a, b in zip(recs, back):
            assert (a.Y, a.status, a.objective, a.revenue_net, a.revenue_eq6) == (
                b.Y, b.status, b.objective, b.revenue_net, b.revenue_eq6
            )
        rows = list(csv.reader(open(tmp_path / "sweep_trajectories.csv")))
        assert rows[0] == ["Y", "t", "milliC"]
        assert {float(r[0]) for r in rows[1:]} == {2002.0, 2003.0}

    def test_infeasible_clear_writes_summary_only(self, tmp_path):
        from test_scenario import stock_scenario

        run = run_auction(stock_scenario())
        emit_results(tmp_path, run=run)
        summary = json.loads((tmp_path / "summary.json").read_text())
        assert summary["status"] == "infeasible" and summary["violated_periods"]
        assert not (tmp_path / "prices.csv").exists()

    def test_manifest_hashes(self, tmp_path, tiny1_path):
        import hashlib

        m = RunManifest.for_inputs(tiny1_path, "clear", {"tol": 1e-6}, scenario_inputs(tiny1_path), "now")
        m.write(tmp_path)
        data = json.loads((tmp_path / "manifest.json").read_text())
        assert data["input_hashes"][str(tiny1_path)] == hashlib.sha256(tiny1_path.read_bytes()).hexdigest()
        assert data["command"] == "clear" and data["tool_version"]

    def test_unwritable_directory(self, tmp_path, tiny1_path):
        (tmp_path / "file").write_text("")
        with pytest.raises(ScenarioError, match="cannot create"):
            emit_results(tmp_path / "file" / "sub", sweep=[])

    def test_byte_identical_reruns(self, tmp_path, tiny1_path):
        for d in ("a", "b"):
            emit_results(tmp_path / d, run=self.run(tiny1_path)[1])
        for name in ("prices.csv", "allocations.csv", "trajectory.csv", "cap_duals.csv", "summary.json"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_csvs_use_plain_numbers(self, tmp_path, tiny1_path):
        emit_results(tmp_path, run=self.run(tiny1_path)[1])
        for name in ("prices.csv", "allocations.csv", "trajectory.csv", "cap_duals.csv"):
            rows = [r for r in csv.reader(open(tmp_path / name)) if r and not r[0].startswith("#")]
            for r in rows[1:]:
                for cell in r:
                    assert "," not in cell and " " not in cell


def test_sweep_record_equality_ignores_time():
    a = SweepRecord(1.0, Status.OPTIMAL, 1.0, solve_time=1.0)
    b = SweepRecord(1.0, Status.OPTIMAL, 1.0, solve_time=2.0)
    assert a.same_outcome(b)


@pytest.mark.slow
def test_desk_fixture_matches_builder(desk):
    assert load_scenario(SCENARIOS / "desk.scenario") == desk
