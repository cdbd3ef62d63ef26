"""scikit-learn style wrapper: fit a transport map between two point clouds."""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .costs import is_strictly_convex_cost
from .decomposition import decompose
from .formats import cost_from_json
from .geometry import DEFAULT_TOL
from .measures import DiscreteMeasure, equal_masses
from .ot_core import solve_kantorovich
from .rebuild import rebuild_plan

DEFAULT_COST = {"kind": "h_norm", "h": {"power": 2}, "norm": "square"}


def check_cloud(X, name="X") -> np.ndarray:
    """Finite float array of shape (k, 2)."""
    X = check_array(X, dtype=float, ensure_all_finite=True, input_name=name)
    if X.shape[1] != 2:
        raise ValueError(f"{name} must have 2 columns, got {X.shape[1]}")
    return X


def check_weights(w, k, name="sample_weight") -> np.ndarray:
    if w is None:
        return equal_masses(k)
    w = np.asarray(w, dtype=float)
    if w.shape != (k,) or np.any(~np.isfinite(w)) or np.any(w <= 0):
        raise ValueError(f"{name} must be {k} positive finite numbers")
    w = w / w.sum()
    w[-1] = 1.0 - w[:-1].sum()
    return w


class TransportMapEstimator(TransformerMixin, BaseEstimator):
    """Optimal transport map from the fitted source cloud ``X`` to ``y``.

    ``fit`` solves the discrete problem and, for flat costs, rebuilds the
    optimal plan into a map where possible.  ``transform`` sends each row
    to the barycentre of the targets of its nearest fitted source.
    """

    def __init__(self, cost=None, tol=DEFAULT_TOL, rebuild=True):
        self.cost = cost
        self.tol = tol
        self.rebuild = rebuild

    def fit(self, X, y, sample_weight=None, target_weight=None):
        X = check_cloud(X, "X")
        Y = check_cloud(y, "y")
        c = cost_from_json(self.cost if self.cost is not None else DEFAULT_COST)
        mu = DiscreteMeasure(X, check_weights(sample_weight, len(X)))
        nu = DiscreteMeasure(Y, check_weights(target_weight, len(Y), "target_weight"))
        sol = solve_kantorovich(mu, nu, c, self.tol)
        plan = sol.plan
        self.rebuild_report_ = None
        if self.rebuild and not is_strictly_convex_cost(c):
            report = rebuild_plan(plan, decompose(plan, mu, nu, c, self.tol), mu, nu, c, tol=self.tol)
            self.rebuild_report_ = report
            plan = report.new_plan
        self.plan_ = plan
        self.potentials_ = sol.potentials
        self.value_ = sol.value
        self.source_points_ = X
        self.target_points_ = Y
        moved = np.zeros_like(X)
        np.add.at(moved, plan.rows, plan.mass[:, None] * Y[plan.cols])
        moved /= plan.row_sums()[:, None]
        single = plan.targets_per_source()[plan.rows] == 1
        moved[plan.rows[single]] = Y[plan.cols[single]]
        self.images_ = moved
        self.is_map_ = plan.is_map()
        self._tree = cKDTree(X)
        self.n_features_in_ = 2
        return self

    def transform(self, X):
        check_is_fitted(self, "plan_")
        X = check_cloud(X, "X")
        _, idx = self._tree.query(X)
        return self.images_[idx]

    def displacement(self, X):
        """``x - T(x)`` for each row."""
        return check_cloud(X, "X") - self.transform(X)
