"""Printer model lookup: each model carries its cost and printing process."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from ..errors import ConfigError, PrinterLookupError
from .materials import normalize_name

PROCESSES = ("FDM", "SLA", "LaserSintering", "Jetting")

COST_RANGE = (175.0, 1.5e6)


@dataclass(frozen=True)
class PrinterInfo:
    cost: float
    process: str


def load_printer_table(path=None) -> dict:
    """model -> PrinterInfo map; keys normalized, costs range-checked."""
    if path is None:
        with resources.files("pricegrid.data").joinpath("printers.json").open("r") as fh:
            raw = json.load(fh)
    else:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    table = {}
    for model, info in raw.items():
        cost = float(info["cost"])
        process = info["process"]
        if process not in PROCESSES:
            raise ConfigError(f"printer {model!r} has unknown process {process!r}")
        if not COST_RANGE[0] <= cost <= COST_RANGE[1]:
            raise ConfigError(
                f"printer {model!r} cost {cost} outside {COST_RANGE}"
            )
        table[normalize_name(model)] = PrinterInfo(cost=cost, process=process)
    return table


def lookup_printer(model: str, table: dict) -> PrinterInfo:
    """Strict lookup: an unknown model raises rather than guessing a cost."""
    key = normalize_name(model)
    try:
        return table[key]
    except KeyError:
        raise PrinterLookupError(model, known_models=sorted(table)) from None
