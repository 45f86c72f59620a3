"""Long-maturity sensitivities of diffusion models via principal eigenpairs."""

import json

from ._core import LongGreeksError, __version__, cir_bond_price, selftest, solve_care
from ._core import run_json as _run_json

__all__ = ["LongGreeksError", "__version__", "cir_bond_price", "run", "selftest", "solve_care"]


def run(command, config):
    """Run a subcommand on a config dict and return the decoded report.

    The report holds the CSV table (``header`` and ``rows``), ``results``,
    ``diagnostics`` and the resolved ``config``.
    """
    return json.loads(_run_json(command, json.dumps(config)))
