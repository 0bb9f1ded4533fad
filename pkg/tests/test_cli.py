import json

import pytest

from gensobol import catalog, gsi
from gensobol.cli import main, parse_model
from gensobol.models import MinModel, ProductModel


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


class TestModelShorthand:
    def test_min(self):
        assert isinstance(parse_model("min:d=5"), MinModel)

    def test_product(self):
        f = parse_model("product:mu=1,tau=1,1,0.5,0.5")
        assert isinstance(f, ProductModel) and f.tau == (1.0, 1.0, 0.5, 0.5) and f.mu == (1.0,) * 4

    def test_json_file(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text(json.dumps({"kind": "product", "mu": [1, 2], "tau": [1, 1]}))
        assert parse_model(str(p)).mu == (1.0, 2.0)


class TestList:
    def test_listing(self, capsys):
        code, out, _ = run(capsys, "list")
        assert code == 0 and out
        block = out.split("superset_bilinear")[1].split("\n\n")[0]
        assert "2^|w1| + 2^|w2| - 1" in out
        assert "superset_bilinear" in out and block
        msd = out.split("mean_square_dimension")[1]
        assert "d + 1" in msd.split("\n")[3]


class TestEstimate:
    def test_min_component(self, capsys):
        code, out, _ = run(capsys, "estimate", "--model", "min:d=5", "--estimator", "variance_component_bilinear",
                           "--w", "1,2,3", "--w1", "1", "--n", "100000", "--seed", "7")
        assert code == 0
        rec = json.loads(out)
        assert abs(rec["estimate"] - 1.68e-4) < 3 * rec["std_error"]
        assert rec["cost"] == 6 and rec["seed"] == 7 and rec["n"] == 100_000

    def test_n_zero_is_usage_error(self, capsys):
        code, _, err = run(capsys, "estimate", "--model", "min:d=5", "--estimator", "mean_dimension", "--n", "0")
        assert code == 2 and err

    def test_bad_model_and_estimator(self, capsys):
        assert run(capsys, "estimate", "--model", "cube:d=2", "--estimator", "mean_dimension", "--n", "5")[0] == 2
        assert run(capsys, "estimate", "--model", "min:d=3", "--estimator", "nope", "--n", "5")[0] == 2
        assert run(capsys, "estimate", "--model", "min:d=3", "--n", "5")[0] == 2
        assert run(capsys, "estimate", "--model", "min:d=3", "--estimator", "upper_index", "--u", "[9]",
                   "--n", "5")[0] == 2

    def test_spec_file_matches_catalog(self, capsys, tmp_path):
        spec = catalog.variance_component_bilinear(5, [1, 2, 3], [2])
        path = tmp_path / "vc.json"
        path.write_text(gsi.serialize(spec))
        common = ["--model", "min:d=5", "--n", "5000", "--seed", "3"]
        _, a, _ = run(capsys, "estimate", "--spec-file", str(path), *common)
        _, b, _ = run(capsys, "estimate", "--estimator", "variance_component_bilinear", "--w", "1,2,3",
                      "--w1", "2", *common)
        ra, rb = json.loads(a), json.loads(b)
        assert ra["estimate"] == rb["estimate"] and ra["std_error"] == rb["std_error"]

    def test_bad_spec_file(self, capsys, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{oops")
        assert run(capsys, "estimate", "--spec-file", str(path), "--model", "min:d=3", "--n", "5")[0] == 2

    def test_byte_identical_reruns(self, tmp_path):
        args = ["estimate", "--model", "product:mu=1,tau=1,0.5,0.25", "--estimator", "saltelli_first_second",
                "--n", "3000", "--format", "csv", "--seed", "4"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(args + ["--out", str(a)]) == 0
        assert main(args + ["--out", str(b), "--workers", "4"]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert a.read_text().count("\n") == 1 + 3 + 3 + 3

    def test_seed_from_environment(self, capsys, monkeypatch):
        monkeypatch.setenv("GENSOBOL_SEED", "7")
        from gensobol.cli import build_parser
        args = build_parser().parse_args(["estimate", "--model", "min:d=3", "--estimator", "mean_dimension",
                                          "--n", "5"])
        assert args.seed == 7

    def test_bias_corrected_flag(self, capsys):
        code, out, _ = run(capsys, "estimate", "--model", "min:d=3", "--estimator", "lower_index", "--u", "1",
                           "--n", "4000", "--bias-corrected", "--reps", "10")
        rec = json.loads(out)
        assert code == 0 and rec["estimator_kind"] == "bias-corrected"


class TestTableAndVerify:
    def test_table_scaled(self, capsys, tmp_path):
        out_file = tmp_path / "t2.json"
        code, out, _ = run(capsys, "table", "2", "--scale", "200", "--out", str(out_file))
        assert code == 0 and "Eff." in out and "S.Dev" in out
        assert len(json.loads(out_file.read_text())) == 6

    def test_bad_scale(self, capsys):
        assert run(capsys, "table", "1", "--scale", "0")[0] == 2

    def test_bad_table(self, capsys):
        assert run(capsys, "table", "4")[0] == 2

    def test_verify(self, capsys):
        code, out, _ = run(capsys, "verify")
        lines = [line for line in out.splitlines() if line.startswith("[")]
        assert code == 0 and len(lines) >= 6 and all(line.startswith("[PASS]") for line in lines)
        assert run(capsys, "verify")[1] == out

    def test_verify_failure_exit_code(self, capsys, monkeypatch):
        from gensobol import verify
        monkeypatch.setitem(verify.SUITES, "broken", lambda seed=0: (False, "forced"))
        assert run(capsys, "verify")[0] == 3
