"""Command-line interface: schemas, formats, exit codes."""

import json

import pytest

from walkrange.cli import run


def run_json(capsys, argv):
    rc = run(argv)
    out = capsys.readouterr().out.strip()
    return rc, json.loads(out.splitlines()[-1]), out


def test_dist_exact_counts_are_strings(capsys):
    rc, rep, raw = run_json(capsys, ["dist", "--n", "6", "--k", "2",
                                     "--lmax", "4"])
    assert rc == 0
    assert rep["schema_version"] == 1
    rows = rep["results"]["distribution"]
    assert all(isinstance(r["count"], str) for r in rows)
    assert rep["results"]["total"] == "924"
    assert sum(int(r["count"]) for r in rows) + \
        int(rep["results"]["tail_count"]) == 924


def test_dist_float_backend(capsys):
    rc, rep, _ = run_json(capsys, ["dist", "--n", "6", "--k", "2",
                                   "--lmax", "3", "--backend", "float"])
    assert rc == 0
    rows = rep["results"]["distribution"]
    assert "count" not in rows[0]
    assert abs(sum(r["probability"] for r in rows) - 1) < 0.2


def test_json_output_round_trips_byte_identical(capsys):
    rc, rep, raw = run_json(capsys, ["dist", "--n", "4", "--k", "1",
                                     "--lmax", "2"])
    assert rc == 0
    assert json.dumps(rep, sort_keys=True) == raw


def test_csv_output_has_header(capsys):
    rc = run(["range-dist", "--n", "4", "--format", "csv"])
    out = capsys.readouterr().out.strip().splitlines()
    assert rc == 0
    assert out[0] == "n,m,count,probability"
    assert len(out) > 2


def test_range_dist_matches_known_values(capsys):
    rc, rep, _ = run_json(capsys, ["range-dist", "--n", "2"])
    assert rc == 0
    got = {r["m"]: int(r["count"]) for r in rep["results"]["distribution"]}
    assert got == {2: 2, 3: 4}


def test_oracle_output_shape(capsys):
    rc, rep, _ = run_json(capsys, ["oracle", "--n", "2", "--track", "2"])
    assert rc == 0
    assert rep["results"]["counts"] == {"N4=1": 4, "N4=2": 2}


def test_oracle_with_range(capsys):
    rc, rep, _ = run_json(capsys, ["oracle", "--n", "2", "--range"])
    assert rc == 0
    assert rep["results"]["counts"] == {"ran=2": 2, "ran=3": 4}


def test_moments_subcommand(capsys):
    rc, rep, _ = run_json(capsys, ["moments", "--spec", "1:2", "--n", "2"])
    assert rc == 0
    assert rep["results"]["value"] == "4"


def test_first_moment_subcommand(capsys):
    rc, rep, _ = run_json(capsys, ["first-moment", "--d", "1", "--k", "1",
                                   "--n", "500"])
    assert rc == 0
    assert rep["results"]["asymptotic"] == 1.0
    assert abs(rep["results"]["expected_points"] - 1.0) < 0.02


def test_asymp_xi(capsys):
    rc, rep, _ = run_json(capsys, ["asymp", "--xi", "2"])
    assert rc == 0
    assert rep["results"]["xi"] == pytest.approx(1.047198, abs=1e-5)


def test_asymp_table1(capsys):
    rc, rep, _ = run_json(capsys, ["asymp", "--table", "1", "--lmax", "3"])
    assert rc == 0
    rows = {e["l"]: e for e in rep["results"]["doublepoints_n39"]}
    assert rows[0]["probability"] == pytest.approx(0.34462, abs=5e-6)
    assert rows[0]["limit_method"] == "extrapolated"
    assert rows[0]["limit_probability"] == pytest.approx(0.35101, abs=1e-3)
    assert rows[3]["limit_method"] == "tail-law"
    assert rows[3]["limit_probability"] == pytest.approx(0.04779, abs=5e-5)


def test_asymp_table3_small(capsys):
    rc, rep, _ = run_json(capsys, ["asymp", "--table", "3", "--kmax", "2"])
    assert rc == 0
    ent = {(e["k1"], e["k2"]): e["covariance"]
           for e in rep["results"]["covariances"]}
    assert ent[(1, 1)] == pytest.approx(0.5, abs=1e-8)
    assert ent[(1, 2)] == pytest.approx(-0.08877, abs=5e-6)


def test_verify_subcommand_exit_zero(capsys):
    rc = run(["verify", "--n-max", "3"])
    captured = capsys.readouterr()
    rep = json.loads(captured.out.strip().splitlines()[-1])
    assert rc == 0
    assert rep["results"]["mismatches"] == 0
    assert "PASS" in captured.err


def test_verify_to_length_sixteen(capsys):
    rc = run(["verify", "--n-max", "8"])
    rep = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert rc == 0
    assert rep["results"]["mismatches"] == 0


def test_internal_error_returns_structured_object(capsys):
    rc = run(["moments", "--spec", "1:3,2:2", "--n", "3"])
    out = capsys.readouterr().out
    assert rc == 1
    err = json.loads(out.strip().splitlines()[-1])
    assert err["error"]["type"] == "UnsupportedDepth"


def test_argument_errors_exit_two(capsys):
    with pytest.raises(SystemExit) as exc:
        run(["dist", "--n", "4"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        run(["nonsense"])
    assert exc.value.code == 2
