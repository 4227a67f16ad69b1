import json

import numpy as np
import pytest

from consdyn.cli import main
from consdyn.geometry import interval_spec
from consdyn.maps import mean_selector, midpoint_map, scale_map
from consdyn.scenarios import (
    Scenario,
    ScenarioError,
    averaging_map_library,
    build_sequence,
    builtin_scenarios,
    derived_seeds,
    get_scenario,
    load_scenarios,
    resolve_initial,
    resolve_spec,
    save_scenarios,
    valid_selector_triples,
)


def test_scenario_validation():
    with pytest.raises(ScenarioError):
        Scenario(name="x", mode="explode")
    with pytest.raises(ScenarioError):
        Scenario(name="x", mode="simulate", initial={"coords": [[0.0]]})  # no maps
    with pytest.raises(ScenarioError):
        Scenario(name="x", mode="simulate", maps=(midpoint_map(),))  # no initial
    with pytest.raises(ScenarioError):
        Scenario(name="x", mode="certify", maps=(midpoint_map(),), sample={"count": 1, "n": 2, "d": 1})
    with pytest.raises(ScenarioError):
        Scenario(name="x", mode="certify", maps=(midpoint_map(),), check="averaging")
    with pytest.raises(ScenarioError):
        Scenario(name="x", mode="rendezvous")


def test_builtins_round_trip_through_json():
    table = builtin_scenarios()
    assert len(table) == 12
    for name, sc in table.items():
        d1 = sc.to_dict()
        wire = json.loads(json.dumps(d1))
        d2 = Scenario.from_dict(wire).to_dict()
        assert json.dumps(d1, sort_keys=True) == json.dumps(d2, sort_keys=True), name


def test_save_and_load_files(tmp_path):
    path = tmp_path / "scenarios.json"
    table = builtin_scenarios()
    save_scenarios(list(table.values()), path)
    loaded = load_scenarios(path)
    assert sorted(loaded) == sorted(table)
    for name in table:
        assert loaded[name].to_dict() == table[name].to_dict()


def test_load_rejects_duplicates_and_bad_shape(tmp_path):
    sc = builtin_scenarios()["paper/krause-midpoint"]
    dup = tmp_path / "dup.json"
    dup.write_text(json.dumps({"scenarios": [sc.to_dict(), sc.to_dict()]}))
    with pytest.raises(ScenarioError, match="duplicate"):
        load_scenarios(dup)
    bare = tmp_path / "bare.json"
    bare.write_text(json.dumps([sc.to_dict()]))
    with pytest.raises(ScenarioError, match="scenarios"):
        load_scenarios(bare)


def test_get_scenario_unknown_lists_names():
    with pytest.raises(ScenarioError, match="paper/krause-midpoint"):
        get_scenario("nope/never")


def test_derived_seeds_reproducible_and_distinct():
    a = derived_seeds(42)
    b = derived_seeds(42)
    assert a["switching"] == b["switching"]
    assert a["scheduler"] == b["scheduler"]
    assert a["sampling"] == b["sampling"]
    r1 = np.random.default_rng(a["initial"]).uniform(size=4)
    r2 = np.random.default_rng(b["initial"]).uniform(size=4)
    assert (r1 == r2).all()
    assert len({a["switching"], a["scheduler"], a["sampling"]}) == 3
    c = derived_seeds(43)
    assert c["switching"] != a["switching"]


def test_resolve_initial_explicit_and_random():
    sc = builtin_scenarios()["paper/krause-midpoint"]
    x0 = resolve_initial(sc)
    assert (x0.coords == np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])).all()
    rnd = builtin_scenarios()["paper/watergun-rendezvous"]
    p1 = resolve_initial(rnd)
    p2 = resolve_initial(rnd)
    assert (p1.coords == p2.coords).all()
    assert p1.n == 8 and p1.d == 2
    assert p1.coords.min() >= 0.0 and p1.coords.max() <= 1.0
    with pytest.raises(ScenarioError):
        resolve_initial(
            Scenario(name="x", mode="simulate", maps=(midpoint_map(),), initial={"nope": 1})
        )


def test_resolve_spec_precedence():
    explicit = Scenario(
        name="x", mode="simulate", maps=(midpoint_map(),),
        coordinate_map=interval_spec(), initial={"coords": [[0.0, 0.0], [1.0, 1.0]]},
    )
    assert resolve_spec(explicit).kind == "interval"
    claimed = Scenario(
        name="x", mode="simulate", maps=(mean_selector((2, 3, 2)),),
        initial={"coords": [[0.0], [1.0], [2.0]]},
    )
    assert resolve_spec(claimed).kind == "interval"
    unclaimed = Scenario(
        name="x", mode="simulate", maps=(scale_map(2.0),),
        initial={"coords": [[0.0], [1.0]]},
    )
    assert resolve_spec(unclaimed).kind == "identity"


def test_build_sequence_uses_derived_switching_seed():
    sc = Scenario(
        name="x", mode="simulate", maps=(midpoint_map(), midpoint_map()),
        policy="random", seed=5, initial={"coords": [[0.0, 0.0], [1.0, 1.0]]},
    )
    s1 = build_sequence(sc)
    s2 = build_sequence(sc)
    assert s1.seed == s2.seed == derived_seeds(5)["switching"]


def test_selector_triples_and_library():
    triples = valid_selector_triples()
    assert len(triples) == 46
    assert all(not (1 in t and 4 in t) for t in triples)
    lib = averaging_map_library()
    assert len(lib) == 14
    assert len({e.label for e in lib}) == 14
    for entry in lib:
        assert entry.descriptor.claim is not None, entry.label


# ---------------------------------------------------------------- CLI


def test_cli_simulate_artifacts(tmp_path, capsys):
    code = main([
        "run", "simulate", "--name", "paper/krause-midpoint", "--out", str(tmp_path)
    ])
    assert code == 0
    out = capsys.readouterr().out
    assert "consensus" in out
    csv_path = tmp_path / "paper-krause-midpoint.trajectory.csv"
    summary_path = tmp_path / "paper-krause-midpoint.summary.json"
    assert csv_path.exists() and summary_path.exists()
    summary = json.loads(summary_path.read_text())
    assert summary["stop_reason"] == "consensus"
    header = csv_path.read_text().splitlines()[0]
    assert header == "t,agent,c1,c2,diameter,gap"


def test_cli_artifacts_bit_identical(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    for out in (a, b):
        assert main([
            "run", "simulate", "--name", "paper/krause-midpoint", "--out", str(out)
        ]) == 0
    for fname in ("paper-krause-midpoint.trajectory.csv", "paper-krause-midpoint.summary.json"):
        assert (a / fname).read_bytes() == (b / fname).read_bytes()


def test_cli_max_steps_override(tmp_path):
    assert main([
        "run", "simulate", "--name", "paper/quarter-power",
        "--max-steps", "5", "--out", str(tmp_path),
    ]) == 0
    summary = json.loads((tmp_path / "paper-quarter-power.summary.json").read_text())
    assert summary["steps"] == 5
    assert summary["stop_reason"] == "max_steps"


def test_cli_certify_violation_exits_2(tmp_path, capsys):
    code = main([
        "run", "certify", "--name", "fixture/scale-by-2", "--out", str(tmp_path)
    ])
    assert code == 2
    assert "witness" in capsys.readouterr().out
    report = json.loads((tmp_path / "fixture-scale-by-2.certify.json").read_text())
    assert report[0]["witness"] is not None


def test_cli_certify_clean_from_file(tmp_path, capsys):
    sc = Scenario(
        name="local/midpoint-ok",
        mode="certify",
        check="averaging",
        maps=(midpoint_map(),),
        sample={"count": 20, "n": 3, "d": 2, "low": -1.0, "high": 1.0},
    )
    path = tmp_path / "custom.json"
    save_scenarios([sc], path)
    code = main([
        "run", "certify", "--name", "local/midpoint-ok",
        "--file", str(path), "--out", str(tmp_path),
    ])
    assert code == 0
    assert "inclusion ok" in capsys.readouterr().out


def test_cli_rendezvous_pair(tmp_path, capsys):
    code = main([
        "run", "rendezvous", "--name", "paper/watergun-pair", "--out", str(tmp_path)
    ])
    assert code == 0
    assert "consensus found!" in capsys.readouterr().out
    events = (tmp_path / "paper-watergun-pair.events.jsonl").read_text().splitlines()
    assert len(events) == 2
    summary = json.loads((tmp_path / "paper-watergun-pair.summary.json").read_text())
    assert summary["checks_ok"] is True


def test_cli_unknown_scenario(tmp_path, capsys):
    code = main(["run", "simulate", "--name", "no/such", "--out", str(tmp_path)])
    assert code == 1
    assert "unknown scenario" in capsys.readouterr().err


def test_cli_mode_mismatch(tmp_path, capsys):
    code = main([
        "run", "certify", "--name", "paper/krause-midpoint", "--out", str(tmp_path)
    ])
    assert code == 1
    assert "simulate scenario" in capsys.readouterr().err


def test_cli_missing_name_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "simulate"])
    assert exc.value.code == 1


def test_cli_bad_mode_is_usage_error():
    with pytest.raises(SystemExit) as exc:
        main(["run", "launch"])
    assert exc.value.code == 1


def test_cli_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"scenarios": [}')
    code = main(["run", "simulate", "--name", "x", "--file", str(bad)])
    assert code == 1
    err = capsys.readouterr().err
    assert "malformed JSON" in err and "line" in err


def test_cli_scenario_file_end_to_end(tmp_path):
    sc = Scenario(
        name="local/pair",
        mode="simulate",
        maps=(midpoint_map(),),
        initial={"coords": [[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]},
        tol=1e-6,
        max_steps=100,
    )
    path = tmp_path / "mine.json"
    save_scenarios([sc], path)
    code = main([
        "run", "simulate", "--name", "local/pair",
        "--file", str(path), "--out", str(tmp_path),
    ])
    assert code == 0
    assert (tmp_path / "local-pair.summary.json").exists()


def test_cli_matrix_csv(tmp_path, capsys):
    mat = tmp_path / "A.csv"
    mat.write_text("0.5,0.5,0.0\n0.0,0.5,0.5\n0.5,0.0,0.5\n")
    code = main(["run", "matrix", "--file", str(mat), "--out", str(tmp_path)])
    assert code == 0
    out = capsys.readouterr().out
    assert "tau" in out and "0.5" in out
    assert "scrambling: yes" in out
    analysis = json.loads((tmp_path / "matrix.analysis.json").read_text())
    assert analysis["tau"] == 0.5


def test_cli_matrix_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("1.0,0.2\n0.0,1.0\n")
    assert main(["run", "matrix", "--file", str(bad)]) == 1
    assert "row" in capsys.readouterr().err
    assert main(["run", "matrix"]) == 1
    table = tmp_path / "table.json"
    table.write_text(json.dumps({"matrices": {"half": [[0.5, 0.5], [0.5, 0.5]]}}))
    assert main(["run", "matrix", "--file", str(table)]) == 1
    assert main(["run", "matrix", "--file", str(table), "--name", "half"]) == 0
    assert main(["run", "matrix", "--file", str(table), "--name", "absent"]) == 1


def test_cli_list(tmp_path, capsys):
    assert main(["list"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert len(out) == len(builtin_scenarios())
    assert any("paper/watergun-rendezvous" in line for line in out)
    sc = builtin_scenarios()["paper/stripe"]
    path = tmp_path / "one.json"
    save_scenarios([sc], path)
    assert main(["list", "--file", str(path)]) == 0
    assert capsys.readouterr().out.splitlines() == ["paper/stripe                     simulate"]
