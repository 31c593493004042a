"""Range likelihood models."""

from __future__ import annotations

import math
from abc import ABC, abstractmethod


class LikelihoodModel(ABC):
    """Density of an observed range given a predicted one.

    ``kernel`` may drop factors that are constant across particles; the
    filter renormalizes weights, and multiplies the kernel sum by ``scale``
    only to test for underflow.
    """

    scale: float = 1.0

    @abstractmethod
    def evaluate(self, observed, predicted):
        ...

    def kernel(self, observed, predicted):
        return self.evaluate(observed, predicted)

    def reweight(self, weights, observed, predicted):
        """Prior weights times the (possibly unscaled) likelihood."""
        return weights * self.kernel(observed, predicted)


class CauchyLikelihood(LikelihoodModel):
    """Cauchy density with location at the predicted range and scale ``sigma`` (m)."""

    def __init__(self, sigma: float = 1.0):
        if not sigma > 0 or not math.isfinite(sigma):
            raise ValueError(f"sigma must be positive and finite, got {sigma}")
        self.sigma = float(sigma)
        self.sigma2 = self.sigma * self.sigma
        self.scale = self.sigma / math.pi

    def evaluate(self, observed, predicted):
        d = observed - predicted
        return self.scale / (d * d + self.sigma2)

    def kernel(self, observed, predicted):
        d = observed - predicted
        return 1.0 / (d * d + self.sigma2)

    def reweight(self, weights, observed, predicted):
        # 2 add, 1 mul, 1 div per particle
        d = observed - predicted
        return weights / (d * d + self.sigma2)

    def __repr__(self):
        return f"CauchyLikelihood(sigma={self.sigma})"
