"""
Shared fixtures and hypothesis strategies.
"""

import itertools
import logging

import pytest
from hypothesis import strategies as st

from forest_kernel import config as config_module
from forest_kernel.config import Settings
from forest_kernel.model import Configuration, ExplicitKernel, PairValue


@pytest.fixture(autouse=True)
def default_settings(monkeypatch):
    """Library default settings, independent of the caller's environment."""
    for name in ("MAX_POINTS", "ENUMERATION_LIMIT", "KERNEL_LIMIT", "WORKERS", "DEBUG_MEMO",
                 "LOG_LEVEL", "LOG_FILE", "FLOAT_TOLERANCE"):
        monkeypatch.delenv(f"FOREST_KERNEL_{name}", raising=False)
    fresh = Settings(_env_file=None)
    monkeypatch.setattr(config_module, "settings", fresh)
    return fresh


@pytest.fixture
def root_logger():
    """Restore the root logger after a test that calls setup_logging."""
    root = logging.getLogger()
    saved = (root.level, list(root.handlers))
    yield root
    for handler in root.handlers:
        if handler not in saved[1]:
            handler.close()
    root.setLevel(saved[0])
    root.handlers[:] = saved[1]


rationals = st.fractions(min_value=-5, max_value=5, max_denominator=7)
nonzero_rationals = rationals.filter(lambda q: q != 0)


@st.composite
def configurations(draw, max_total=5, min_roots=1):
    """Anonymous configurations with min_roots <= m and m + n <= max_total."""
    total = draw(st.integers(min_value=max(min_roots, 1), max_value=max_total))
    m = draw(st.integers(min_value=min_roots, max_value=total))
    return Configuration.anonymous(m, total - m)


@st.composite
def explicit_kernels(draw, config):
    """Rational values on every pair of config that can carry an edge."""
    roots = set(config.root_labels)
    values = []
    for a, b in itertools.combinations(config.labels, 2):
        if a in roots and b in roots:
            continue
        values.append(PairValue(pair=(a, b), value=draw(rationals)))
    return ExplicitKernel(values=tuple(values))


@st.composite
def weighted_cases(draw, max_total=5):
    """(configuration, explicit kernel, h) triples."""
    config = draw(configurations(max_total=max_total))
    return config, draw(explicit_kernels(config)), draw(nonzero_rationals)


@pytest.fixture
def line_config():
    """Root x1 at 0, vertices y1 at 1 and y2 at 2."""
    return Configuration.of([("x1", (0.0,))], [("y1", (1.0,)), ("y2", (2.0,))])


@pytest.fixture
def write_config(tmp_path):
    """Write a config file body and return its path."""
    def write(body: str, name: str = "config.json"):
        path = tmp_path / name
        path.write_text(body, encoding="utf-8")
        return path
    return write
