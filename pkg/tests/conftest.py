"""Shared fixtures: the builtin asset and its packaged calibration/lexicon.

Session-scoped because the asset build (marching cubes + ring extraction)
takes a couple of seconds and every module needs the same instance.
"""

import pytest

from bodyforge.bodymodel import builtin_asset
from bodyforge.labeling import default_bins
from bodyforge.textlang import default_lexicon


@pytest.fixture(scope="session")
def asset():
    return builtin_asset()


@pytest.fixture(scope="session")
def bins():
    return default_bins()


@pytest.fixture(scope="session")
def lexicon():
    return default_lexicon()
