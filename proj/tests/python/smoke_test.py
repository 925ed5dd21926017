"""Smoke test for the qpcert extension module."""

import math

import numpy as np

import _qpcert as q


def main():
    g = q.csbm_sample(n=24, p=0.3, q=0.05, k_sep=2.0, seed=7)
    g = q.split(g, 6, 1)
    assert g.n == 24
    assert g.num_labeled() == 12
    assert np.asarray(g.features).shape == (24, g.d)

    assert abs(q.kappa0(0.0) - 0.5) < 1e-12
    assert abs(q.kappa1(0.0) - 1.0 / math.pi) < 1e-12

    k = np.asarray(q.ntk(g, "gcn"))
    assert k.shape == (24, 24)
    assert np.allclose(k, k.T, atol=1e-10)

    lo, up = q.ntk_bounds(g, "gcn", adversarial=[13, 14], delta=0.05,
                          norm="inf")
    lo, up = np.asarray(lo), np.asarray(up)
    assert (up - lo).min() >= -1e-12
    assert lo[0, 0] <= k[0, 0] + 1e-9 <= up[0, 0] + 2e-9

    labels = np.asarray(g.labels)
    y = np.where(labels[:12] == 1, 1.0, -1.0)
    alpha, objective, residual = q.solve_dual(k[:12, :12], y, 0.1)
    assert objective <= 1e-12
    assert residual <= 1e-8
    margin = q.predict_margin(np.asarray(alpha), y, k[20, :12])
    assert np.isfinite(margin)

    out = q.certify_scenario(g, "gcn", "PU", p_adv=0.5, delta=0.0, seed=3,
                             c=0.1)
    assert out["n_correct"] > 0
    assert out["n_certified"] == out["n_correct"]
    verdicts = {r["verdict"] for r in out["results"]}
    assert verdicts <= {"certified", "not-certified", "undecided-node-limit"}
    print("python smoke test passed")


if __name__ == "__main__":
    main()
