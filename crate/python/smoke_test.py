"""Smoke test for the qsf_py extension module."""

import math

import qsf_py


def main():
    k = qsf_py.QKernel(0.5, 0.1, 2)
    assert k.dim == 2 and abs(k.support_radius_sq() - 6.0) < 1e-12
    assert qsf_py.QKernel(1.2, 1.0, 2).support_radius_sq() is None
    assert k.density([0.0, 0.0]) > 0.0

    draws = qsf_py.sample(0.5, 2, 20_000, seed=3)
    mean_sq = sum(x[0] ** 2 for x in draws) / len(draws)
    exact = qsf_py.analytic_moment(0.5, 0, [2, 0])
    assert abs(mean_sq - exact) < 0.05, (mean_sq, exact)
    assert abs(qsf_py.analytic_moment(0.5, 1, [2, 0]) - 1.5) < 1e-12

    t = qsf_py.QKernel(1.0, 0.5, 1).sf_term_two([2.0], 3.0, 1.0)
    assert math.isclose(t[0], 2.0 * 2.0 / (2 * 0.5))
    try:
        qsf_py.QKernel(2.0, 0.1, 4)
    except ValueError:
        pass
    else:
        raise AssertionError("q outside the domain accepted")

    run = qsf_py.run_single(0.8, 0.01, outer=500, inner=10, seed=1)
    assert run["distance"] is not None and len(run["theta_final"]) == 4

    csv, table = qsf_py.run_experiment(
        'algorithm = "gqsf2"\nq_grid = [0.8, "gaussian"]\nbeta_grid = [0.01]\nM = 200\nL = 5\nreplications = 2\n'
    )
    assert csv.count("\n") == 3 and "Gaussian" in table
    print(table, end="")
    print("presets:", ", ".join(qsf_py.presets()))
    print("smoke test ok")


if __name__ == "__main__":
    main()
