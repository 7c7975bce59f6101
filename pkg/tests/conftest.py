import numpy as np
import pytest

from kcontact import example_charts, lie_closure
from kcontact.holonomy import as_samples_adapted, as_samples_schouten
from kcontact.transport import SamplerConfig


@pytest.fixture(scope="session")
def charts():
    return example_charts()


@pytest.fixture(scope="session")
def algebra_cache(charts):
    """Holonomy algebras per (chart, seed, route), computed once per session."""
    cache = {}

    def get(name, seed=0, route="schouten", n_paths=64, span_tol=1e-6):
        key = (name, seed, route, n_paths, span_tol)
        if key not in cache:
            chart = charts[name]
            x0 = np.zeros(chart.dim)
            cfg = SamplerConfig(n_paths=n_paths, seed=seed)
            if route == "schouten":
                samples = as_samples_schouten(chart, x0, cfg)
            elif route == "annihilator":
                samples = as_samples_schouten(chart, x0, cfg, variant="annihilator")
            elif route == "adapted":
                samples = as_samples_adapted(chart, x0, cfg)
            else:
                raise ValueError(route)
            cache[key] = lie_closure(samples, span_tol)
        return cache[key]

    return get


def domain_points(chart, count, seed=0, margin=0.9):
    from kcontact import random_domain_points

    return random_domain_points(chart, count, np.random.default_rng(seed), margin=margin)
