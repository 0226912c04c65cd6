"""Caching scheme registry: name -> Scheme contract plus its config type.

Schemes:
  agnostic  — cache coded product subfiles, oblivious to matrix structure
  uncoded   — cache leading raw columns, unicast the uncovered product entries
  multireq  — flat-file replication delivering both demanded matrices whole
  row       — horizontal-block placement with compressed block-product multicasts
  col       — vertical-block placement with intersection-grouped multicasts
"""

from __future__ import annotations

from ..model import Scheme
from . import agnostic, baselines, col, row
from .agnostic import AgnosticConfig
from .baselines import MultiRequestConfig, UncodedConfig
from .col import ColConfig
from .row import RowConfig

SCHEMES: dict[str, Scheme] = {
    "agnostic": Scheme(
        "agnostic",
        agnostic.validate,
        agnostic.place,
        agnostic.deliver,
        agnostic.decode,
        agnostic.formula_load,
        agnostic.constraints,
    ),
    "uncoded": Scheme(
        "uncoded",
        baselines.uncoded_validate,
        baselines.uncoded_place,
        baselines.uncoded_deliver,
        baselines.uncoded_decode,
        baselines.uncoded_formula_load,
        baselines.uncoded_constraints,
    ),
    "multireq": Scheme(
        "multireq",
        baselines.multireq_validate,
        baselines.multireq_place,
        baselines.multireq_deliver,
        baselines.multireq_decode,
        baselines.multireq_formula_load,
        baselines.multireq_constraints,
    ),
    "row": Scheme(
        "row",
        row.validate,
        row.place,
        row.deliver,
        row.decode,
        row.formula_load,
        row.constraints,
    ),
    "col": Scheme(
        "col",
        col.validate,
        col.place,
        col.deliver,
        col.decode,
        col.formula_load,
        col.constraints,
    ),
}

CONFIG_TYPES = {
    "agnostic": AgnosticConfig,
    "uncoded": UncodedConfig,
    "multireq": MultiRequestConfig,
    "row": RowConfig,
    "col": ColConfig,
}

__all__ = [
    "SCHEMES",
    "CONFIG_TYPES",
    "AgnosticConfig",
    "UncodedConfig",
    "MultiRequestConfig",
    "RowConfig",
    "ColConfig",
]
