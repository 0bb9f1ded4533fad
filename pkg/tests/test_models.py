import itertools
import json
import math

import numpy as np
import pytest

from gensobol.models import (
    GridFunction,
    MinModel,
    ModelError,
    ProductModel,
    brute_force_anova,
    brute_force_theta,
    load_grid_function,
    model_from_config,
    validate_base_function,
)
from gensobol.subsets import SubsetMask, all_subsets, complement, nxor_set, subsets_of


def S(*idx, d):
    return SubsetMask.from_indices(idx, d)


class TestProductModel:
    def test_evaluation(self):
        f = ProductModel(mu=1.0, tau=[1.0, 0.5])
        x = np.array([[0.5, 0.5], [1.0, 0.0]])
        g = math.sqrt(12) * 0.5
        assert f(x) == pytest.approx([1.0, (1 + g) * (1 - 0.5 * g)])
        assert f([0.5, 0.5]) == pytest.approx(1.0)

    def test_table2_truths(self):
        f = ProductModel(mu=1.0, tau=(1, 1, 0.5, 0.5, 0.25, 0.25))
        got = [f.exact_index("lower", S(*u, d=6)) for u in ((1, 2), (3, 4), (5, 6))]
        assert got == pytest.approx([3.0, 0.5625, 0.12890625], abs=1e-12)

    def test_index_consistency(self):
        f = ProductModel(mu=[1.0, 0.5, 2.0, 1.0], tau=[1.0, 0.7, 0.3, 0.2])
        d = f.d
        total = f.exact_index("total_variance")
        for u in all_subsets(d):
            low = sum(f.exact_index("sigma", v) for v in subsets_of(u))
            assert f.exact_index("lower", u) == pytest.approx(low, abs=1e-12)
            up = f.exact_index("upper", u)
            assert up == pytest.approx(total - f.exact_index("lower", complement(u)), abs=1e-12)
        assert sum(f.exact_index("sigma", u) for u in all_subsets(d)) == pytest.approx(total)

    def test_matches_grid_discretization(self):
        f = ProductModel(mu=1.0, tau=[1.0, 0.5, 0.25])
        tab = brute_force_anova(GridFunction.from_callable(f, 64))
        for u in all_subsets(3)[1:]:
            assert tab.sigma[u] == pytest.approx(f.exact_index("sigma", u), abs=1e-2)

    def test_points_outside_cube(self):
        with pytest.raises(ModelError):
            ProductModel(mu=1.0, tau=[1.0, 1.0])([0.2, 1.2])

    def test_wrong_width(self):
        with pytest.raises(ModelError):
            ProductModel(mu=1.0, tau=[1.0, 1.0])(np.zeros((3, 3)))

    def test_custom_g_validated(self):
        with pytest.raises(ModelError):
            ProductModel(mu=1.0, tau=[1.0], g=lambda x: x)
        validate_base_function(lambda x: math.sqrt(2) * np.cos(2 * np.pi * x))


class TestMinModel:
    def test_lower_closed_form_against_grid(self):
        # the closed form holds for the continuum; a fine grid gets close
        f = MinModel(3)
        tab = brute_force_anova(GridFunction.from_callable(f, 60))
        lower = tab.lower()
        for u in all_subsets(3)[1:]:
            assert lower[u] == pytest.approx(f.exact_index("lower", u), rel=2e-2)

    def test_known_values(self):
        f = MinModel(5)
        assert f.exact_index("total_variance") == pytest.approx(5 / (36 * 7))
        assert f.exact_index("sigma", S(1, 2, 3, d=5)) == pytest.approx(1 / 5940, rel=1e-12)
        assert f.exact_index("mean_dimension") == pytest.approx(1.5, abs=1e-12)

    def test_monte_carlo_mean(self):
        f = MinModel(4)
        x = np.random.default_rng(0).random((200_000, 4))
        assert f(x).mean() == pytest.approx(0.2, abs=3e-3)


class TestGridFunction:
    def test_cell_mapping(self):
        gf = GridFunction(np.arange(4.0), m=4, d=1)
        assert gf(np.array([[0.0], [0.249], [0.25], [0.999], [1.0]])).tolist() == [0, 0, 1, 3, 3]

    def test_row_major_last_index_fastest(self):
        gf = GridFunction(np.arange(9.0), m=3, d=2)
        assert gf([0.1, 0.7]) == 2.0
        assert gf([0.7, 0.1]) == 6.0

    def test_values_are_copied(self):
        vals = np.zeros((2, 2))
        gf = GridFunction(vals, m=2, d=2)
        vals[0, 0] = 5.0
        assert gf([0.1, 0.1]) == 0.0

    def test_bad_size(self):
        with pytest.raises(ModelError):
            GridFunction(np.zeros(5), m=2, d=2)

    def test_anova_identity(self, rng):
        for d, m in [(1, 5), (2, 3), (3, 4), (4, 2)]:
            gf = GridFunction.random(d, m, rng)
            tab = brute_force_anova(gf)
            assert tab.mean == pytest.approx(gf.values.mean())
            assert tab.variance == pytest.approx(gf.values.var(), abs=1e-12)
            assert sum(tab.sigma.values()) == pytest.approx(gf.values.var(), abs=1e-12)

    def test_theta_oracle(self, rng):
        for d, m in [(2, 3), (3, 2), (3, 4)]:
            gf = GridFunction.random(d, m, rng)
            tab = brute_force_anova(gf)
            lower = tab.lower()
            for u, v in itertools.product(all_subsets(d), repeat=2):
                th = brute_force_theta(gf, u, v)
                assert abs(th - (tab.mean**2 + lower[nxor_set(u, v)])) < 1e-10
                assert th == pytest.approx(brute_force_theta(gf, v, u), abs=1e-12)
                assert th == pytest.approx(brute_force_theta(gf, complement(u), complement(v)), abs=1e-12)

    def test_load_json_and_csv(self, tmp_path, rng):
        gf = GridFunction.random(2, 3, rng)
        p = tmp_path / "g.json"
        p.write_text(json.dumps(gf.to_config()))
        assert np.array_equal(load_grid_function(p).values, gf.values)
        c = tmp_path / "g.csv"
        c.write_text("2,3\n" + "\n".join(",".join(repr(float(v)) for v in row) for row in gf.values.reshape(3, 3)))
        assert np.array_equal(load_grid_function(c).values, gf.values)


class TestConfig:
    def test_product_and_min(self):
        f = model_from_config({"kind": "product", "mu": [1, 1], "tau": [1, 0.5]})
        assert isinstance(f, ProductModel) and f.d == 2
        assert model_from_config({"kind": "min", "d": 5}).d == 5

    def test_unknown(self):
        with pytest.raises(ModelError):
            model_from_config({"kind": "spline"})
