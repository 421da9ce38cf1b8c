"""Estimator-style wrapper around the control-time search.

``ControlTimeEstimator`` holds a moving-region description as
hyper-parameters.  ``fit`` runs the sampled worst-ray search (optionally on
a caller-supplied ray table) and ``predict`` returns first-hit times of
rays.  A ray table has one row per ray: ``(family, p1, p2, p3)`` with the
parametrization documented in :mod:`tgcc.gcc`.
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .gcc import (
    FAMILY_NAMES,
    RaySampling,
    RaySet,
    boundary_hit_times,
    check_tgcc,
    check_tgcc_boundary,
    estimate_T0,
    hit_times,
    sample_rays,
)
from .geometry import DomainKind
from .obsdomain import MovingDomainSpec


def check_ray_table(X) -> np.ndarray:
    """Validate a ray table: 2D, 4 finite columns, known integer family codes."""
    X = check_array(X, dtype=float, ensure_2d=True)
    if X.shape[1] != 4:
        raise ValueError(f"ray tables have 4 columns (family, p1, p2, p3), got {X.shape[1]}")
    fam = X[:, 0]
    if np.any(fam != np.round(fam)) or np.any((fam < 0) | (fam >= len(FAMILY_NAMES))):
        raise ValueError("unknown ray family code")
    return X


class ControlTimeEstimator(BaseEstimator):
    """Sampling lower bound on the control time of a moving region.

    Parameters mirror :class:`tgcc.obsdomain.MovingDomainSpec` plus the
    search controls ``horizon`` (cap on first-hit times), ``seed``,
    ``sampling_scale`` (density multiplier for the ray grids) and
    ``threads``.

    Fitted attributes: ``t0_``, ``margin_``, ``status_``, ``worst_ray_``,
    ``verdict_``, ``spec_``, ``n_rays_``.
    """

    def __init__(self, domain="interval", a=0.25, eps=None, v=0.0, motion="constant_speed",
                 delta=0.0, t_start=0.0, mode="interior", offset=0.0, horizon=100.0,
                 seed=0, sampling_scale=1.0, threads=1):
        self.domain = domain
        self.a = a
        self.eps = eps
        self.v = v
        self.motion = motion
        self.delta = delta
        self.t_start = t_start
        self.mode = mode
        self.offset = offset
        self.horizon = horizon
        self.seed = seed
        self.sampling_scale = sampling_scale
        self.threads = threads

    # -- helpers ----------------------------------------------------------

    def _spec(self) -> MovingDomainSpec:
        return MovingDomainSpec(DomainKind.parse(self.domain), a=float(self.a),
                                eps=None if self.eps is None else float(self.eps), v=float(self.v),
                                motion=self.motion, delta=float(self.delta), t_start=float(self.t_start),
                                mode=self.mode, offset=float(self.offset))

    def _sampling(self) -> RaySampling:
        s = RaySampling(seed=int(self.seed), threads=int(self.threads))
        return s if self.sampling_scale == 1.0 else s.scaled(float(self.sampling_scale))

    def _rays(self, X, kind) -> RaySet:
        X = check_ray_table(X)
        return RaySet(kind, X[:, 0].astype(int), X[:, 1:].copy())

    # -- estimator API ------------------------------------------------------

    def fit(self, X=None, y=None):
        """Estimate the control time; X (optional) replaces the default rays."""
        if not self.horizon > 0:
            raise ValueError("horizon must be positive")
        spec = self._spec()
        kind = spec.kind
        sampling = self._sampling()
        rays = self._rays(X, kind) if X is not None else sample_rays(kind, sampling, spec)
        if spec.mode == "boundary":
            verdict = check_tgcc_boundary(kind, spec, float(self.horizon), sampling, rays=rays)
        else:
            verdict = estimate_T0(kind, spec, sampling, float(self.horizon), rays=rays)
        self.spec_ = spec
        self.verdict_ = verdict
        self.t0_ = verdict.t0_estimate
        self.margin_ = verdict.margin
        self.status_ = verdict.status
        self.worst_ray_ = verdict.worst_ray
        self.n_rays_ = len(rays)
        return self

    def predict(self, X) -> np.ndarray:
        """First-hit time of each ray of the table (inf: no hit before horizon)."""
        check_is_fitted(self, "t0_")
        rays = self._rays(X, self.spec_.kind)
        if self.spec_.mode == "boundary":
            t, indet = boundary_hit_times(self.spec_, rays, float(self.horizon))
            return np.where(indet, math.nan, t)
        return hit_times(self.spec_, rays, float(self.horizon), int(self.threads))

    def check(self, T: float):
        """t-GCC verdict at horizon T with the estimator's sampling."""
        spec = self._spec()
        if spec.mode == "boundary":
            return check_tgcc_boundary(spec.kind, spec, T, self._sampling())
        return check_tgcc(spec.kind, spec, T, self._sampling())


__all__ = ["ControlTimeEstimator", "check_ray_table"]
