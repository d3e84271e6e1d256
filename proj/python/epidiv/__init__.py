"""Epistemic diversity statistics over claim corpora.

Thin wrapper around the compiled core: Hill/Hill-Shannon diversity,
sample-coverage estimation, coverage-based rarefaction, Jensen-Shannon
divergence, percentile bootstrap, sentence splitting, the synthetic
population oracle and mock-backed entailment clustering.
"""

try:
    from .epidiv_core import *  # noqa: F401,F403  (wheel layout)
    from .epidiv_core import __version__  # noqa: F401
except ImportError:
    from epidiv_core import *  # noqa: F401,F403  (build-tree layout)
    from epidiv_core import __version__  # noqa: F401
