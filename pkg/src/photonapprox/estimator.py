"""scikit-learn style wrappers.

``ApproximateLink`` is a stateless transformer that passes float data
through a configured photonic link. ``ApproximationTuner`` learns, from
sample input, the most aggressive approximation a kernel tolerates and
then behaves like the corresponding ``ApproximateLink``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .photonics import LossParameters, cluster_id
from .quality import (
    DEFAULT_BITS,
    DEFAULT_REDUCTIONS,
    DEFAULT_THRESHOLD,
    LinkChannel,
    get_kernel,
    run_kernel,
    select_config,
    sensitivity_sweep,
)
from .signaling import scheme_by_name
from .simcore import laser_savings_model


class ApproximateLink(BaseEstimator, TransformerMixin):
    def __init__(
        self,
        num_approx_bits=0,
        reduction_fraction=0.0,
        scheme="ook",
        source=cluster_id(0),
        topology=None,
        params=None,
        loss_aware=True,
    ):
        self.num_approx_bits = num_approx_bits
        self.reduction_fraction = reduction_fraction
        self.scheme = scheme
        self.source = source
        self.topology = topology
        self.params = params
        self.loss_aware = loss_aware

    def fit(self, X=None, y=None):
        # Only the link is configured here; the data is not inspected.
        self.channel_ = LinkChannel(
            num_approx_bits=self.num_approx_bits,
            reduction_fraction=self.reduction_fraction,
            scheme=scheme_by_name(self.scheme),
            params=self.params or LossParameters(),
            topology=self.topology,
            source=self.source,
            loss_aware=self.loss_aware,
        )
        if X is not None:
            X = check_array(X, dtype=np.float64, ensure_2d=False)
            self.n_features_in_ = X.shape[1] if X.ndim == 2 else 1
        return self

    def transform(self, X):
        check_is_fitted(self, "channel_")
        X = check_array(X, dtype=np.float64, ensure_2d=False)
        return self.channel_(X)


class ApproximationTuner(BaseEstimator, TransformerMixin):
    def __init__(
        self,
        kernel="identity",
        threshold=DEFAULT_THRESHOLD,
        bits=DEFAULT_BITS,
        reductions=DEFAULT_REDUCTIONS,
        scheme="ook",
        source=cluster_id(0),
        topology=None,
        params=None,
        n_jobs=1,
    ):
        self.kernel = kernel
        self.threshold = threshold
        self.bits = bits
        self.reductions = reductions
        self.scheme = scheme
        self.source = source
        self.topology = topology
        self.params = params
        self.n_jobs = n_jobs

    def fit(self, X, y=None):
        kernel = get_kernel(self.kernel)
        X = kernel.validate(X)
        scheme = scheme_by_name(self.scheme)
        self.surface_ = sensitivity_sweep(
            kernel,
            X,
            bits=self.bits,
            reductions=self.reductions,
            scheme=scheme,
            topology=self.topology,
            params=self.params,
            source=self.source,
            n_jobs=self.n_jobs,
        )
        self.selected_ = select_config(self.surface_, self.threshold, laser_savings_model(scheme))
        self.link_ = ApproximateLink(
            self.selected_.num_approx_bits,
            self.selected_.reduction_fraction,
            self.scheme,
            self.source,
            self.topology,
            self.params,
        ).fit()
        return self

    def transform(self, X):
        check_is_fitted(self, "link_")
        return self.link_.transform(X)

    def score(self, X, y=None):
        """Negative percentage error of the kernel under the selected setting."""
        check_is_fitted(self, "link_")
        report = run_kernel(self.kernel, X, self.link_.channel_)
        return -report.percent_error
