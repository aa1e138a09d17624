"""Small helpers shared by the demo scripts."""

import numpy as np

from bargecast import features as ft


def random_valid_features(rng, n):
    """Random rows that respect the feature-vector invariants."""
    X = np.zeros((n, ft.N_FEATURES))
    X[:, list(ft.QUARTILE_IDX)] = np.sort(rng.uniform(1, 12, size=(n, 3)), axis=1)
    X[:, list(ft.PTST_IDX)] = rng.dirichlet(np.ones(3), size=n)
    X[:, ft.IDX["SOG_SD"]] = rng.uniform(0, 2, n)
    X[:, ft.IDX["NROT"]] = rng.uniform(0, 30, n)
    X[:, ft.IDX["Acc_SD"]] = rng.uniform(0, 3, n)
    X[:, ft.IDX["Len"]] = rng.uniform(15, 120, n)
    X[:, ft.IDX["Wid"]] = rng.uniform(5, 40, n)
    X[:, ft.IDX["VDraft"]] = rng.uniform(1, 4, n)
    for group in ft.ONE_HOT_GROUPS.values():
        choice = rng.integers(0, len(group), n)
        for j, idx in enumerate(group):
            X[:, idx] = (choice == j).astype(float)
    ft.recompute_derived(X)
    return X
