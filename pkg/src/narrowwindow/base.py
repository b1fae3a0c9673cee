from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_geometries


class GeometryEstimator(BaseEstimator):
    """Estimator whose samples are geometries ``(d1, d2, a)``.

    Subclasses implement ``_solve_one(geometry)`` returning a result object and
    ``_result_value(result)`` extracting the scalar that ``predict`` reports.
    ``fit`` solves every sample and keeps the results in ``results_``.
    """

    def _solve_one(self, geometry):
        raise NotImplementedError

    def _result_value(self, result) -> float:
        raise NotImplementedError

    def fit(self, X, y=None):
        geometries = check_geometries(X)
        self.geometries_ = geometries
        self.results_ = [self._solve_one(g) for g in geometries]
        self.n_samples_ = len(geometries)
        return self

    def _results_for(self, X) -> list:
        check_is_fitted(self, "results_")
        cache = dict(zip(self.geometries_, self.results_))
        out = []
        for g in check_geometries(X):
            if g not in cache:
                cache[g] = self._solve_one(g)
            out.append(cache[g])
        return out

    def predict(self, X) -> np.ndarray:
        return np.asarray([self._result_value(r) for r in self._results_for(X)], dtype=float)

    def fit_predict(self, X, y=None) -> np.ndarray:
        self.fit(X)
        return np.asarray([self._result_value(r) for r in self.results_], dtype=float)
