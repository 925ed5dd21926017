"""Poisoning/backdoor robustness certification for wide (G)NNs."""

try:
    from ._qpcert import (  # noqa: F401
        Graph,
        QpcertError,
        certify_scenario,
        csbm_sample,
        kappa0,
        kappa1,
        load_graph,
        normalize,
        ntk,
        ntk_bounds,
        predict_margin,
        save_graph,
        solve_dual,
        split,
    )
except ImportError:  # build-tree layout: module next to the package
    from _qpcert import (  # noqa: F401
        Graph,
        QpcertError,
        certify_scenario,
        csbm_sample,
        kappa0,
        kappa1,
        load_graph,
        normalize,
        ntk,
        ntk_bounds,
        predict_margin,
        save_graph,
        solve_dual,
        split,
    )
