"""Corpus ingestion: parse, validate, serialize, and synthesize listings.

A corpus is a flat file (CSV or JSON-lines) of supplier service listings.
Each listing is one unique (printer, material, resolution, price) offer;
the price is the quote for the standard 10 cm benchmark figurine, in USD.
The synthetic generator draws listings whose marginals match configurable
process/material mixes and whose price comes from a noisy log-linear score
of the listing's own attributes, so downstream classifiers have a signal
to learn while the price distribution stays right-skewed.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .errors import ConfigError, CorpusError, CorpusSchemaError

REGIONS = ("US", "EU")
PROCESSES = ("FDM", "SLA", "LaserSintering", "Jetting")

# Column order for corpus files. The four sub-ratings are accepted on input
# and carried through (they exist to demonstrate correlation pruning) but
# are optional; everything else is required.
COLUMNS = (
    "listing_id",
    "region",
    "latitude",
    "longitude",
    "avg_rating",
    "print_quality_rating",
    "speed_rating",
    "service_rating",
    "communication_rating",
    "num_reviews",
    "avg_response_time",
    "days_since_activation",
    "num_machines",
    "registered_business",
    "description_text",
    "num_sample_images",
    "printer_model",
    "material_name",
    "resolution",
    "order_completion_days",
    "price",
)
OPTIONAL_COLUMNS = frozenset(
    {
        "print_quality_rating",
        "speed_rating",
        "service_rating",
        "communication_rating",
    }
)
REQUIRED_COLUMNS = tuple(c for c in COLUMNS if c not in OPTIONAL_COLUMNS)
# fields where a null value is data (no reviews yet), not a parse failure
NULLABLE_FIELDS = OPTIONAL_COLUMNS | {"avg_rating"}


@dataclass(frozen=True)
class RawListing:
    """One supplier service listing in raw (pre-encoding) form.

    avg_rating is None exactly when the supplier has no reviews yet;
    avg_response_time is in hours, resolution in microns, prices in USD.
    """

    listing_id: str
    region: str
    latitude: float
    longitude: float
    avg_rating: float | None
    num_reviews: int
    avg_response_time: float
    days_since_activation: int
    num_machines: int
    registered_business: bool
    description_text: str
    num_sample_images: int
    printer_model: str
    material_name: str
    resolution: float
    order_completion_days: float
    price: float
    print_quality_rating: float | None = None
    speed_rating: float | None = None
    service_rating: float | None = None
    communication_rating: float | None = None


@dataclass(frozen=True)
class RowDiagnostic:
    row: int
    field: str
    message: str


@dataclass
class ParseResult:
    listings: list
    diagnostics: list


def validate_listing(lst: RawListing) -> list[str]:
    """All invariant violations for one listing (empty list when valid)."""
    problems = []
    if lst.region not in REGIONS:
        problems.append(f"region must be one of {REGIONS}, got {lst.region!r}")
    if not -90.0 <= lst.latitude <= 90.0:
        problems.append(f"latitude out of [-90,90]: {lst.latitude}")
    if not -180.0 <= lst.longitude <= 180.0:
        problems.append(f"longitude out of [-180,180]: {lst.longitude}")
    if lst.avg_rating is not None and not 1.0 <= lst.avg_rating <= 5.0:
        problems.append(f"rating out of [1,5]: {lst.avg_rating}")
    for name in ("print_quality_rating", "speed_rating", "service_rating",
                 "communication_rating"):
        v = getattr(lst, name)
        if v is not None and not 1.0 <= v <= 5.0:
            problems.append(f"{name} out of [1,5]: {v}")
    if lst.num_reviews < 0:
        problems.append("num_reviews must be non-negative")
    if (lst.avg_rating is None) != (lst.num_reviews == 0):
        problems.append(
            "avg_rating must be absent exactly when num_reviews is 0"
        )
    if lst.avg_response_time < 0:
        problems.append("avg_response_time must be non-negative")
    if lst.days_since_activation < 0:
        problems.append("days_since_activation must be non-negative")
    if lst.num_machines < 1:
        problems.append("num_machines must be positive")
    if lst.num_sample_images < 0:
        problems.append("num_sample_images must be non-negative")
    if not lst.resolution > 0:
        problems.append("resolution must be positive")
    if not lst.order_completion_days > 0:
        problems.append("order_completion_days must be positive")
    if not lst.price > 0:
        problems.append("price must be positive")
    return problems


def _parse_optional_float(text):
    text = text.strip()
    return None if text == "" else float(text)


def _parse_bool(text):
    t = text.strip().lower()
    if t in ("true", "1", "yes"):
        return True
    if t in ("false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_FIELD_PARSERS = {
    "listing_id": str,
    "region": lambda s: s.strip(),
    "latitude": float,
    "longitude": float,
    "avg_rating": _parse_optional_float,
    "print_quality_rating": _parse_optional_float,
    "speed_rating": _parse_optional_float,
    "service_rating": _parse_optional_float,
    "communication_rating": _parse_optional_float,
    "num_reviews": int,
    "avg_response_time": float,
    "days_since_activation": int,
    "num_machines": int,
    "registered_business": _parse_bool,
    "description_text": str,
    "num_sample_images": int,
    "printer_model": str,
    "material_name": str,
    "resolution": float,
    "order_completion_days": float,
    "price": float,
}


def _listing_from_record(record: dict, row: int, diagnostics: list):
    values = {}
    bad = False
    for name, parser in _FIELD_PARSERS.items():
        if name not in record or record[name] is None:
            if name in NULLABLE_FIELDS:
                values[name] = None
                continue
            diagnostics.append(RowDiagnostic(row, name, "missing value"))
            bad = True
            continue
        raw = record[name]
        try:
            values[name] = parser(raw) if isinstance(raw, str) else raw
        except (ValueError, TypeError) as exc:
            diagnostics.append(RowDiagnostic(row, name, str(exc)))
            bad = True
    if bad:
        return None
    lst = RawListing(**values)
    problems = validate_listing(lst)
    if problems:
        for p in problems:
            diagnostics.append(RowDiagnostic(row, "-", p))
        return None
    return lst


def parse_corpus(source, fmt: str) -> ParseResult:
    """Parse a corpus from text/bytes/a file object in 'csv' or 'jsonl'.

    Rows that fail to parse or violate listing invariants become
    RowDiagnostic entries (0-based data row index) and are excluded; row
    order is otherwise preserved. A malformed CSV header raises
    CorpusSchemaError naming the missing columns.
    """
    fmt = fmt.lower()
    if fmt not in ("csv", "jsonl", "json"):
        raise ConfigError(f"unknown corpus format: {fmt!r}")
    if isinstance(source, bytes):
        source = source.decode("utf-8")
    if hasattr(source, "read"):
        source = source.read()
        if isinstance(source, bytes):
            source = source.decode("utf-8")
    listings = []
    diagnostics = []
    if fmt == "csv":
        reader = csv.DictReader(io.StringIO(source))
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise CorpusSchemaError(missing, extra=set(header) - set(COLUMNS))
        for row, record in enumerate(reader):
            lst = _listing_from_record(record, row, diagnostics)
            if lst is not None:
                listings.append(lst)
    else:
        for row, line in enumerate(source.splitlines()):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                diagnostics.append(RowDiagnostic(row, "-", f"bad json: {exc}"))
                continue
            missing = [c for c in REQUIRED_COLUMNS if c not in record]
            if missing:
                diagnostics.append(
                    RowDiagnostic(row, "-", f"missing fields: {missing}")
                )
                continue
            lst = _listing_from_record(record, row, diagnostics)
            if lst is not None:
                listings.append(lst)
    return ParseResult(listings, diagnostics)


def _format_cell(value):
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def corpus_to_csv(listings) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(COLUMNS)
    for lst in listings:
        writer.writerow([_format_cell(getattr(lst, c)) for c in COLUMNS])
    return buf.getvalue()


def corpus_to_jsonl(listings) -> str:
    lines = []
    for lst in listings:
        lines.append(json.dumps(asdict(lst), sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def read_corpus(path, fmt=None) -> ParseResult:
    if fmt is None:
        fmt = "jsonl" if str(path).endswith((".jsonl", ".json")) else "csv"
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return parse_corpus(fh.read(), fmt)


def write_corpus(path, listings, fmt=None):
    if fmt is None:
        fmt = "jsonl" if str(path).endswith((".jsonl", ".json")) else "csv"
    text = corpus_to_csv(listings) if fmt == "csv" else corpus_to_jsonl(listings)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# Synthetic generation.
# ---------------------------------------------------------------------------

DEFAULT_PROCESS_MIX = {
    "US": {"FDM": 0.84, "SLA": 0.13, "LaserSintering": 0.02, "Jetting": 0.01},
    "EU": {"FDM": 0.89, "SLA": 0.10, "LaserSintering": 0.007, "Jetting": 0.003},
}

DEFAULT_MATERIAL_MIX = {
    "US": {
        "ABS": 0.20, "PLA": 0.24, "SpecialtyABS": 0.04, "SpecialtyPLA": 0.06,
        "PET": 0.05, "SpecialtyPET": 0.01, "PC": 0.03, "SpecialtyPC": 0.008,
        "Nylon": 0.06, "SpecialtyNylon": 0.015, "Flexible": 0.05, "ASA": 0.02,
        "Metals": 0.002, "Resins": 0.15, "Soluble": 0.035, "Others": 0.03,
    },
    "EU": {
        "ABS": 0.21, "PLA": 0.26, "SpecialtyABS": 0.04, "SpecialtyPLA": 0.06,
        "PET": 0.055, "SpecialtyPET": 0.01, "PC": 0.03, "SpecialtyPC": 0.008,
        "Nylon": 0.065, "SpecialtyNylon": 0.015, "Flexible": 0.055, "ASA": 0.02,
        "Metals": 0.002, "Resins": 0.10, "Soluble": 0.04, "Others": 0.03,
    },
}

# Metro hubs around which supplier coordinates cluster; weights sum to 1.
GEO_HUBS = {
    "US": (
        ((40.71, -74.01), 0.24),   # New York
        ((34.05, -118.24), 0.21),  # Los Angeles
        ((41.88, -87.63), 0.17),   # Chicago
        ((29.76, -95.37), 0.14),   # Houston
        ((25.76, -80.19), 0.12),   # Miami
        ((47.61, -122.33), 0.12),  # Seattle
    ),
    "EU": (
        ((51.51, -0.13), 0.17),    # London
        ((48.86, 2.35), 0.14),     # Paris
        ((52.52, 13.40), 0.14),    # Berlin
        ((40.42, -3.70), 0.11),    # Madrid
        ((45.46, 9.19), 0.11),     # Milan
        ((52.37, 4.90), 0.10),     # Amsterdam
        ((52.23, 21.01), 0.09),    # Warsaw
        ((59.33, 18.06), 0.07),    # Stockholm
        ((48.21, 16.37), 0.07),    # Vienna
    ),
}
GEO_SPREAD_DEG = {"US": 1.3, "EU": 0.9}

# Price bounds observed per region; generated prices are clipped into them.
PRICE_RANGE = {"US": (2.36, 1956.0), "EU": (3.75, 2261.5)}

RESOLUTION_CHOICES = {
    "FDM": ((50.0, 100.0, 200.0, 300.0), (0.15, 0.3, 0.4, 0.15)),
    "SLA": ((25.0, 50.0, 100.0), (0.4, 0.4, 0.2)),
    "LaserSintering": ((60.0, 100.0, 120.0), (0.4, 0.4, 0.2)),
    "Jetting": ((16.0, 28.0, 32.0), (0.4, 0.3, 0.3)),
}


@dataclass(frozen=True)
class PriceModel:
    """Coefficients of the latent log-price score.

    score = intercept + log_cost_weight * log(printer_cost)
          + process_offsets[process] + material_offsets[category]
          + inv_resolution_weight / resolution + N(0, noise_sigma)
    and price = exp(score) clipped into the region's observed range. The
    exponential of a noisy linear score keeps prices right-skewed while
    leaving enough attribute signal to beat the majority-class baseline.
    """

    intercept: float = 2.41
    log_cost_weight: float = 0.05
    inv_resolution_weight: float = 45.0
    noise_sigma: float = 0.18
    process_offsets: dict = field(
        default_factory=lambda: {
            "FDM": 0.0, "SLA": 0.55, "LaserSintering": 1.5, "Jetting": 0.9,
        }
    )
    material_offsets: dict = field(
        default_factory=lambda: {
            "ABS": 0.0, "PLA": 0.08, "SpecialtyABS": 0.42, "SpecialtyPLA": 0.45,
            "PET": 0.18, "SpecialtyPET": 0.48, "PC": 0.38, "SpecialtyPC": 0.68,
            "Nylon": 0.52, "SpecialtyNylon": 0.75, "Flexible": 0.45, "ASA": 0.15,
            "Metals": 1.60, "Resins": 0.30, "Soluble": 0.22, "Others": 0.12,
        }
    )


@dataclass(frozen=True)
class SynthConfig:
    n_listings: int
    region: str = "US"
    seed: int = 0
    process_mix: dict | None = None
    material_mix: dict | None = None
    price_model: PriceModel = field(default_factory=PriceModel)

    def resolved(self) -> "SynthConfig":
        """Fill region defaults and validate."""
        if self.region not in REGIONS:
            raise ConfigError(f"region must be one of {REGIONS}")
        if self.n_listings < 1:
            raise CorpusError("n_listings must be at least 1")
        cfg = self
        if cfg.process_mix is None:
            cfg = replace(cfg, process_mix=dict(DEFAULT_PROCESS_MIX[cfg.region]))
        if cfg.material_mix is None:
            cfg = replace(cfg, material_mix=dict(DEFAULT_MATERIAL_MIX[cfg.region]))
        for name, mix in (("process_mix", cfg.process_mix),
                          ("material_mix", cfg.material_mix)):
            total = math.fsum(mix.values())
            if abs(total - 1.0) > 1e-9:
                raise ConfigError(f"{name} must sum to 1, got {total}")
            if any(p < 0 for p in mix.values()):
                raise ConfigError(f"{name} has negative probabilities")
        return cfg

    def to_json(self) -> dict:
        cfg = self.resolved()
        return {
            "n_listings": cfg.n_listings,
            "region": cfg.region,
            "seed": cfg.seed,
            "process_mix": cfg.process_mix,
            "material_mix": cfg.material_mix,
            "price_model": asdict(cfg.price_model),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "SynthConfig":
        known = {
            "n_listings", "region", "seed", "process_mix", "material_mix",
            "price_model",
        }
        bad = set(obj) - known
        if bad:
            raise ConfigError(f"unknown config keys: {sorted(bad)}")
        pm = obj.get("price_model")
        try:
            price_model = PriceModel(**pm) if pm else PriceModel()
        except TypeError as exc:
            raise ConfigError(f"bad price_model: {exc}") from exc
        try:
            return cls(
                n_listings=int(obj["n_listings"]),
                region=obj.get("region", "US"),
                seed=int(obj.get("seed", 0)),
                process_mix=obj.get("process_mix"),
                material_mix=obj.get("material_mix"),
                price_model=price_model,
            ).resolved()
        except KeyError as exc:
            raise ConfigError(f"missing config key: {exc}") from exc


def _load_data_json(name):
    from importlib import resources

    with resources.files("pricegrid.data").joinpath(name).open("r") as fh:
        return json.load(fh)


_DESCRIPTION_FILLER = (
    "we print your parts with care",
    "quality checked before dispatch",
    "ask about bulk discounts",
    "based in a fully equipped workshop",
    "happy to advise on material choice",
    "send us your files for a quote",
)


def generate_synthetic(cfg: SynthConfig) -> list[RawListing]:
    """Deterministically synthesize a corpus for a SynthConfig.

    Process, material category, printer model (given process) and
    resolution (given process) are drawn from the configured mixes, so
    empirical marginals converge to them; price follows the PriceModel.
    """
    cfg = cfg.resolved()
    n = cfg.n_listings
    rng = np.random.default_rng(cfg.seed)
    pm = cfg.price_model

    printers = _load_data_json("printers.json")
    materials = _load_data_json("materials.json")
    keywords = _load_data_json("keywords.json")

    by_process = {p: [] for p in PROCESSES}
    for model, info in printers.items():
        by_process[info["process"]].append((model, float(info["cost"])))
    names_by_cat = {}
    for mat, cat in materials.items():
        names_by_cat.setdefault(cat, []).append(mat)

    proc_names = list(cfg.process_mix)
    proc_p = np.array([cfg.process_mix[p] for p in proc_names])
    proc_idx = rng.choice(len(proc_names), size=n, p=proc_p / proc_p.sum())

    cat_names = list(cfg.material_mix)
    cat_p = np.array([cfg.material_mix[c] for c in cat_names])
    cat_idx = rng.choice(len(cat_names), size=n, p=cat_p / cat_p.sum())

    hubs = GEO_HUBS[cfg.region]
    hub_p = np.array([w for _, w in hubs])
    hub_idx = rng.choice(len(hubs), size=n, p=hub_p / hub_p.sum())
    spread = GEO_SPREAD_DEG[cfg.region]
    lat = np.array([hubs[h][0][0] for h in hub_idx]) + rng.normal(0, spread, n)
    lon = np.array([hubs[h][0][1] for h in hub_idx]) + rng.normal(0, spread, n)
    lat = np.clip(lat, -90.0, 90.0)
    lon = np.clip(lon, -180.0, 180.0)

    has_reviews = rng.random(n) < 0.75
    num_reviews = np.where(
        has_reviews, 1 + np.floor(rng.exponential(8.0, n)).astype(int), 0
    )
    num_reviews = np.minimum(num_reviews, 500)
    base_quality = np.clip(rng.normal(4.3, 0.45, n), 1.0, 5.0)
    subs = np.clip(
        base_quality[:, None] + rng.normal(0.0, 0.1, (n, 4)), 1.0, 5.0
    ).round(2)
    avg_rating = subs.mean(axis=1).round(2)

    response = np.clip(rng.lognormal(math.log(2.0), 0.9, n), 0.1, 72.0).round(2)
    activation = np.minimum(np.floor(rng.exponential(600.0, n)), 2400).astype(int)
    machines = 1 + rng.poisson(0.8, n)
    registered = rng.random(n) < 0.25
    images = np.minimum(rng.poisson(4.0, n), 40)
    completion = np.clip(1.0 + rng.gamma(2.0, 1.5, n), 1.0, 21.0).round(1)

    kw_cats = list(keywords)
    listings = []
    floor_p, ceil_p = PRICE_RANGE[cfg.region]
    noise = rng.normal(0.0, pm.noise_sigma, n)
    for i in range(n):
        process = proc_names[proc_idx[i]]
        category = cat_names[cat_idx[i]]
        catalog = by_process[process]
        weights = np.array([c ** -0.3 for _, c in catalog])
        model, cost = catalog[rng.choice(len(catalog), p=weights / weights.sum())]
        mat_names = names_by_cat.get(category) or names_by_cat["Others"]
        material = mat_names[int(rng.integers(len(mat_names)))]
        res_vals, res_p = RESOLUTION_CHOICES[process]
        resolution = res_vals[rng.choice(len(res_vals), p=np.array(res_p))]

        if rng.random() < 0.05:
            description = ""
        else:
            parts = []
            for _ in range(int(rng.integers(1, 5))):
                cat_kw = keywords[kw_cats[int(rng.integers(len(kw_cats)))]]
                parts.append(cat_kw[int(rng.integers(len(cat_kw)))])
            parts.append(_DESCRIPTION_FILLER[int(rng.integers(len(_DESCRIPTION_FILLER)))])
            description = ". ".join(parts)

        score = (
            pm.intercept
            + pm.log_cost_weight * math.log(cost)
            + pm.process_offsets.get(process, 0.0)
            + pm.material_offsets.get(category, 0.0)
            + pm.inv_resolution_weight / resolution
            + noise[i]
        )
        price = round(min(max(math.exp(score), floor_p), ceil_p), 2)

        listings.append(
            RawListing(
                listing_id=f"{cfg.region.lower()}-{i + 1:06d}",
                region=cfg.region,
                latitude=round(float(lat[i]), 5),
                longitude=round(float(lon[i]), 5),
                avg_rating=float(avg_rating[i]) if has_reviews[i] else None,
                num_reviews=int(num_reviews[i]),
                avg_response_time=float(response[i]),
                days_since_activation=int(activation[i]),
                num_machines=int(machines[i]),
                registered_business=bool(registered[i]),
                description_text=description,
                num_sample_images=int(images[i]),
                printer_model=model,
                material_name=material,
                resolution=float(resolution),
                order_completion_days=float(completion[i]),
                price=float(price),
                print_quality_rating=float(subs[i, 0]) if has_reviews[i] else None,
                speed_rating=float(subs[i, 1]) if has_reviews[i] else None,
                service_rating=float(subs[i, 2]) if has_reviews[i] else None,
                communication_rating=float(subs[i, 3]) if has_reviews[i] else None,
            )
        )
    return listings


# ---------------------------------------------------------------------------
# Corpus statistics.
# ---------------------------------------------------------------------------

_NUMERIC_STAT_FIELDS = (
    "avg_rating",
    "num_reviews",
    "avg_response_time",
    "days_since_activation",
    "num_machines",
    "num_sample_images",
    "resolution",
    "order_completion_days",
    "price",
)


def _freq_table(values) -> dict:
    out = {}
    total = len(values)
    for v in values:
        out[v] = out.get(v, 0) + 1
    return {str(k): out[k] / total for k in sorted(out, key=str)}


def corpus_stats(listings, material_category=None, printer_process=None) -> dict:
    """Summary table: per-field quartiles plus categorical frequencies.

    material_category / printer_process are optional callables mapping a
    material name / printer model to its category / process; when given,
    their frequency tables are included.
    """
    if not listings:
        raise CorpusError("empty corpus")
    numeric = {}
    for name in _NUMERIC_STAT_FIELDS:
        vals = [getattr(l, name) for l in listings]
        vals = np.array([v for v in vals if v is not None], dtype=np.float64)
        if vals.size == 0:
            continue
        q = np.quantile(vals, [0.0, 0.25, 0.5, 0.75, 1.0])
        numeric[name] = {
            "min": float(q[0]),
            "q1": float(q[1]),
            "median": float(q[2]),
            "q3": float(q[3]),
            "max": float(q[4]),
            "mean": float(vals.mean()),
        }
    categorical = {
        "region": _freq_table([l.region for l in listings]),
        "registered_business": _freq_table(
            [l.registered_business for l in listings]
        ),
        "has_reviews": _freq_table([l.num_reviews > 0 for l in listings]),
    }
    if material_category is not None:
        categorical["material_category"] = _freq_table(
            [material_category(l.material_name) for l in listings]
        )
    if printer_process is not None:
        categorical["process"] = _freq_table(
            [printer_process(l.printer_model) for l in listings]
        )
    return {"n": len(listings), "numeric": numeric, "categorical": categorical}
