import json

import pytest

from mrfpreempt.experiments import (BOUNDS_COLUMNS, KINDS, ORACLE_COLUMNS, PIJ_COLUMNS,
                                    SOLVER_COLUMNS, ConfigError, ExperimentConfig,
                                    config_from_dict, parse_config, parse_config_text,
                                    run_experiment, write_result)


def _small(kind, **extra):
    doc = {"kind": kind, "runs": 1, "seed": 3, **extra}
    return config_from_dict(doc)


def test_minimal_config_gets_defaults():
    cfg = parse_config_text('{"kind": "table2_lattice"}')
    assert cfg.runs == 10
    assert cfg.solver.T0 == 3.0
    assert cfg.solver.max_sweeps == 500
    assert cfg.solver.beta is None
    assert cfg.grid.N_d == [1, 2]
    assert cfg.solver.gibbs(1, 0).coupling == "cluster"


def test_kind_defaults_fill_sections():
    assert parse_config_text('{"kind": "table3_powerlaw"}').topology.type == "power_law"
    fig3 = parse_config_text('{"kind": "fig3_pij"}')
    assert (fig3.topology.rows, fig3.topology.cols) == (10, 25)


@pytest.mark.parametrize("text,fragment", [
    ('{"kind": "table2_lattice", "runs": 0}', "runs"),
    ('{"kind": "nope"}', "kind"),
    ('{"kind": "table2_lattice", "colour": 1}', "unknown keys"),
    ('{"kind": "table2_lattice", "solver": {"T0": -1}}', "T0"),
    ('{"kind": "table2_lattice", "grid": {"solvers": ["magic"]}}', "solvers"),
    ('{"kind": "fig4_nd_pc_sweep", "grid": {"p_c": [1.5]}}', "p_c"),
    ('{"kind": "table2_lattice", "demand": {"hop_range": [5, 2]}}', "hop_range"),
])
def test_validation_errors(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config_text(text)


def test_malformed_json_reports_line_and_column():
    with pytest.raises(ConfigError, match=r"^cfg\.json:3:5: "):
        parse_config_text('{\n  "kind": "fig3_pij",\n    oops\n}', "cfg.json")


@pytest.mark.parametrize("kind", KINDS)
def test_round_trip(kind):
    cfg = config_from_dict({"kind": kind, "seed": 17, "runs": 2})
    again = parse_config_text(cfg.to_json())
    assert again == cfg
    assert again.to_json() == cfg.to_json()


def test_parse_config_reads_shipped_files(tmp_path):
    from pathlib import Path
    shipped = sorted(Path(__file__).parent.parent.joinpath("configs").glob("*.json"))
    kinds = set()
    for p in shipped:
        if p.name == "bounds_params.json":
            continue
        kinds.add(parse_config(p).kind)
    assert kinds == set(KINDS)


def test_route_sweep_rows_and_columns():
    cfg = _small("fig4_nd_pc_sweep", grid={"N_d": [0, 1], "p_c": [0.3]})
    res = run_experiment(cfg)
    assert res.columns == SOLVER_COLUMNS
    assert [(r["solver"], r["N_d"]) for r in res.rows] == [("gibbs", 0), ("gibbs", 1)]
    assert res.to_csv().splitlines()[0] == ",".join(SOLVER_COLUMNS)


def test_table_has_one_row_per_solver():
    cfg = _small("table2_lattice", topology={"rows": 6, "cols": 6},
                 demand={"hop_range": [4, 6]}, grid={"solvers": ["min_conn", "min_bw", "gibbs"]})
    res = run_experiment(cfg)
    assert [(r["solver"], r["N_d"]) for r in res.rows] == [
        ("min_conn", None), ("min_bw", None), ("gibbs", 1), ("gibbs", 2)]
    # crowded links make min_bw refuse; refusals are counted, not fatal
    assert all(r["runs"] + r["refused"] == 1 for r in res.rows)


def test_unreachable_hop_range_is_a_config_error():
    cfg = _small("table2_lattice", topology={"rows": 3, "cols": 3},
                 demand={"hop_range": [9, 12]})
    with pytest.raises(ConfigError):
        run_experiment(cfg)


def test_pij_oracle_and_bounds_shapes():
    pij = run_experiment(_small("fig3_pij", pij={"samples": 50, "max_h": 3}))
    assert pij.columns == PIJ_COLUMNS and [r["h"] for r in pij.rows] == [1, 2, 3]
    orc = run_experiment(_small("oracle_smallscale", runs=5))
    assert orc.columns == ORACLE_COLUMNS and orc.rows[0]["instances"] == 5
    bnd = run_experiment(_small("bounds_check", bounds={"trials": 3},
                                grid={"N_d": [1], "p_c": [0.2]}))
    assert bnd.columns == BOUNDS_COLUMNS and len(bnd.rows) == 1


def test_same_config_same_bytes():
    cfg = _small("fig6_demand_sweep", grid={"c_new": [10.0, 30.0]})
    assert run_experiment(cfg).to_csv() == run_experiment(cfg).to_csv()


def test_write_result_formats(tmp_path):
    res = run_experiment(_small("fig3_pij", pij={"samples": 20, "max_h": 2}))
    write_result(res, tmp_path / "a.csv")
    write_result(res, tmp_path / "a.json", "json")
    assert (tmp_path / "a.csv").read_text() == res.to_csv()
    doc = json.loads((tmp_path / "a.json").read_text())
    assert doc["columns"] == PIJ_COLUMNS
    assert ExperimentConfig(**{"kind": "fig3_pij"}).kind == "fig3_pij"
