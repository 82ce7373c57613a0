import json
import subprocess
import sys

import pytest
from hypothesis import given

from jnalg import expr as ex
from jnalg.algebroid import Form, Multivector, validate_algebroid
from jnalg.catalog import (
    FIXTURES,
    SpecError,
    embed_form_pair,
    fixture,
    load_spec,
    parse_spec,
    tmr_dual,
    tmr_of_jacobi,
)
from jnalg.cli import COMMANDS, ConfigError, emit_report, flatten, main, run
from jnalg.sampling import Sampling, check, combine

from batteries import catalog_exactness, tmr_dual_mismatch
from helpers import seeds

MINIMAL = {"coords": ["x"], "rank": 2, "anchor": [["0"], ["0"]]}
ALL_NAMES = sorted(FIXTURES) + ["tangent(1)", "tangent(2)", "tangent(3)"]


def write(tmp_path, doc, name="spec.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc) if not isinstance(doc, str) else doc, encoding="utf-8")
    return p


class TestLoadSpec:
    def test_minimal(self, tmp_path):
        doc = load_spec(write(tmp_path, MINIMAL))
        assert doc.rank == 2 and doc.P is None
        assert validate_algebroid(doc.algebroid).residual == 0.0

    def test_misspelled_key(self, tmp_path):
        with pytest.raises(SpecError, match="'anchr'.*'anchor'"):
            load_spec(write(tmp_path, {**MINIMAL, "anchr": []}))

    def test_expression_typo(self, tmp_path):
        bad = {**MINIMAL, "P": {"1,2": "x *+ 2"}}
        with pytest.raises(SpecError, match=r"P\[1,2\].*offset 3"):
            load_spec(write(tmp_path, bad))

    def test_unknown_identifier(self, tmp_path):
        with pytest.raises(SpecError, match="unknown identifier 'q'"):
            load_spec(write(tmp_path, {**MINIMAL, "eta": "q"}))

    def test_invalid_json_location(self, tmp_path):
        with pytest.raises(SpecError, match="line 2 column"):
            load_spec(write(tmp_path, '{"coords": ["x"],\n "rank" 2}'))

    def test_missing_file(self, tmp_path):
        with pytest.raises(SpecError, match="cannot read"):
            load_spec(tmp_path / "nope.json")

    @pytest.mark.parametrize("patch,msg", [
        ({"rank": 3}, "anchor: expected 3 entries"),
        ({"anchor": [["0", "1"], ["0"]]}, r"anchor\[1\]: expected 1 entries"),
        ({"structure": {"1,1,1": "1"}}, "diagonal"),
        ({"structure": {"1,1,3": "1"}}, "out of range"),
        ({"structure": {"1,2": "1"}}, "needs 3 entries"),
        ({"structure": {"1,1,2": "1", "1,2,1": "2"}}, "conflicting"),
        ({"phi0": ["0"]}, "phi0: expected 2 entries"),
        ({"P": {"1,1": "1"}}, "diagonal"),
        ({"coords": ["t", "x"]}, "coords"),
        ({"sampling": {"pionts": 3}}, "did you mean 'points'"),
        ({"sampling": {"box": [1, -1]}}, "lo < hi"),
        ({"rank": 0}, "positive"),
    ])
    def test_inconsistent_documents(self, patch, msg):
        with pytest.raises(SpecError, match=msg):
            parse_spec({**MINIMAL, **patch})

    def test_lower_structure_entries_negated(self):
        a = parse_spec({**MINIMAL, "structure": {"1,2,1": "x"}})
        b = parse_spec({**MINIMAL, "structure": {"1,1,2": "-x"}})
        assert a.structure == b.structure

    def test_numbers_accepted(self):
        doc = parse_spec({**MINIMAL, "eta": 2, "phi0": [1, 0]})
        assert doc.eta is ex.const(2)

    def test_sampling_block(self):
        doc = parse_spec({**MINIMAL, "sampling": {"points": 7, "seed": 3, "tol": 1e-6, "box": [0, 2]}})
        assert doc.sampling == Sampling(7, 3, 1e-6, (0.0, 2.0))

    def test_missing_tops(self):
        with pytest.raises(SpecError, match="eta, mu, nu"):
            parse_spec(MINIMAL).modular_data()


class TestFixtures:
    @pytest.mark.parametrize("name", ALL_NAMES)
    def test_gates_pass(self, name):
        doc = fixture(name)
        assert doc.check_gates().passed
        assert validate_algebroid(doc.algebroid).passed

    def test_abelian_zero_residual(self):
        assert validate_algebroid(fixture("abelian2").algebroid).residual == 0.0

    def test_unknown(self):
        with pytest.raises(SpecError, match="known: .*contact_r3"):
            fixture("contact_r4")

    def test_bad_tangent_dimension(self):
        with pytest.raises(SpecError):
            fixture("tangent(0)")

    @given(seeds)
    def test_form_pair_differentials_exact(self, seed):
        out = catalog_exactness(seed)
        assert out["d-exact"] and out["dphi-exact"]
        assert out["d-residual"] == 0.0 and out["dphi-residual"] == 0.0

    def test_form_pair_embedding(self):
        doc = fixture("tmr_of_jacobi")
        A = doc.algebroid
        from jnalg.algebroid import tangent_algebroid

        TM = tangent_algebroid(doc.vars)
        w = embed_form_pair(A, TM.coframe(0), Form.scalar(TM, ex.var("y")))
        assert w.coeffs == {(0,): ex.ONE, (2,): ex.var("y")}

    def test_tmr_dual_matches_built_dual(self):
        assert tmr_dual_mismatch() < 1e-8
        assert tmr_dual_mismatch({"1,2": "1", "2,3": "-y"}, ["0", "0", "1"], ("x", "y", "z")) < 1e-8

    def test_tmr_dual_cocycle(self):
        doc = tmr_dual()
        assert doc.phi0 == (ex.ZERO, ex.const(-1), ex.ZERO)
        from jnalg.jacobi import check_cocycle

        assert check_cocycle(doc.algebroid, doc.jacobi.phi0).passed

    def test_tmr_of_jacobi_rejects_non_jacobi_pair(self):
        doc = tmr_of_jacobi(("x", "y", "z"), {"1,2": "y", "2,3": "1"}, ["0", "0", "0"])
        assert not doc.check_gates().passed

    def test_base_pair(self):
        pair = fixture("contact_r3").base_pair()
        assert pair.check().passed
        with pytest.raises(SpecError):
            fixture("abelian2").base_pair()


def leaf(name, r, tol=1e-8):
    from jnalg.expr import VarSpace

    return check(name, "a = a", [ex.const(r)], VarSpace(["x"]), Sampling(tol=tol))


class TestReports:
    def test_flatten_paths(self):
        tree = combine("top", "", [leaf("a", 0.0), combine("mid", "", [leaf("b", 1.0)])])
        assert [r.check for r in flatten(tree)] == ["top/a", "top/mid/b"]

    def test_empty_json(self):
        assert json.loads(emit_report([], "json")) == []
        assert emit_report([], "text") == b"0/0 checks passed\n"

    def test_single_record_schema(self):
        doc = json.loads(emit_report([leaf("a", 0.0)], "json"))
        assert doc == [{"check": "a", "anchor": "a = a", "residual": 0.0, "pass": True,
                        "witness": doc[0]["witness"], "seed": 42}]
        assert len(doc[0]["witness"]) == 1

    def test_mixed_text(self):
        text = emit_report([leaf("good", 0.0), leaf("bad", 0.5)], "text").decode()
        lines = text.splitlines()
        assert lines[0].startswith("PASS") and lines[1].startswith("FAIL")
        assert lines[-1] == "1/2 checks passed"

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            emit_report([], "yaml")


class TestRun:
    def test_validate_abelian(self):
        reports = run("validate", fixture("abelian2"))
        assert all(r.passed for r in reports)

    @pytest.mark.parametrize("command", sorted(COMMANDS))
    def test_every_command_on_contact(self, command):
        doc = fixture("contact_r3")
        if command in ("check-nijenhuis", "hierarchy"):
            with pytest.raises(ConfigError, match="N"):
                run(command, doc)
            return
        reports = run(command, doc)
        assert reports and all(r.passed for r in reports), [r.failures for r in reports]

    def test_modular_without_nu(self):
        doc = parse_spec({**MINIMAL, "eta": "1", "mu": "1"})
        with pytest.raises(ConfigError, match="nu"):
            run("modular", doc)

    def test_unknown_command(self):
        with pytest.raises(ConfigError):
            run("frobnicate", fixture("abelian2"))

    def test_incompatible_pair_reported(self, tmp_path):
        raw = dict(fixture("contact_r3").raw)
        raw["N"] = [["2 + x" if i == j else "0" for j in range(4)] for i in range(4)]
        reports = run("hierarchy", parse_spec(raw))
        assert len(reports) == 1 and not reports[0].passed


class TestMain:
    def test_exit_zero(self, capsys):
        assert main(["validate", "abelian2"]) == 0
        assert "checks passed" in capsys.readouterr().out

    def test_exit_one(self, tmp_path, capsys):
        bad = {**MINIMAL, "anchor": [["1"], ["x"]]}
        assert main(["validate", str(write(tmp_path, bad))]) == 1
        assert "FAIL" in capsys.readouterr().out

    def test_exit_two_config(self, tmp_path, capsys):
        p = write(tmp_path, {**MINIMAL, "eta": "1", "mu": "1"})
        assert main(["modular", str(p)]) == 2
        assert capsys.readouterr().err.startswith("jnalg: ")

    def test_exit_two_parse(self, tmp_path, capsys):
        p = write(tmp_path, {**MINIMAL, "eta": "2+"})
        assert main(["validate", str(p)]) == 2
        assert "offset 2" in capsys.readouterr().err

    def test_exit_two_unknown_fixture(self, capsys):
        assert main(["validate", "nosuch"]) == 2

    def test_options(self, capsys):
        assert main(["validate", "tangent(2)", "--points", "5", "--seed", "7", "--box", "0,2",
                     "--tol", "1e-6", "--format", "json"]) == 0
        doc = json.loads(capsys.readouterr().out)
        assert doc and all(r["seed"] == 7 for r in doc)
        assert all(0 <= w <= 2 for r in doc for w in r["witness"])

    def test_bad_box(self, capsys):
        with pytest.raises(SystemExit):
            main(["validate", "abelian2", "--box", "1,0"])

    def test_file_sampling_used(self, tmp_path, capsys):
        p = write(tmp_path, {**MINIMAL, "sampling": {"seed": 11}})
        main(["validate", str(p), "--format", "json"])
        assert {r["seed"] for r in json.loads(capsys.readouterr().out)} == {11}

    def test_json_deterministic(self, capsys):
        main(["modular", "contact_r3", "--format", "json"])
        first = capsys.readouterr().out
        main(["modular", "contact_r3", "--format", "json"])
        assert capsys.readouterr().out == first

    def test_console_script(self):
        out = subprocess.run([sys.executable, "-m", "jnalg.cli", "validate", "abelian2"],
                             capture_output=True, text=True)
        assert out.returncode == 0
        assert out.stdout.strip().endswith("checks passed")
