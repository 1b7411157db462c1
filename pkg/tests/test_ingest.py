import json

import numpy as np
import pytest

from conftest import make_listing
from pricegrid import ingest
from pricegrid.errors import ConfigError, CorpusError, CorpusSchemaError


def test_csv_round_trip_two_rows():
    listings = [make_listing(listing_id="a"), make_listing(listing_id="b", price=99.5)]
    text = ingest.corpus_to_csv(listings)
    result = ingest.parse_corpus(text, "csv")
    assert result.diagnostics == []
    assert result.listings == listings


def test_jsonl_round_trip():
    listings = [make_listing(listing_id="a", avg_rating=None, num_reviews=0,
                             description_text="quote, with \"commas\"\nand newline")]
    text = ingest.corpus_to_jsonl(listings)
    assert ingest.parse_corpus(text, "jsonl").listings == listings


def test_rating_out_of_range_row_excluded():
    bad = make_listing(listing_id="bad")
    text = ingest.corpus_to_csv([bad]).replace("4.5", "6")
    result = ingest.parse_corpus(text, "csv")
    assert result.listings == []
    assert any("out of [1,5]" in d.message for d in result.diagnostics)


def test_rating_without_reviews_violates_invariant():
    text = ingest.corpus_to_csv([make_listing(num_reviews=0)])  # avg stays 4.5
    result = ingest.parse_corpus(text, "csv")
    assert result.listings == []
    assert any("num_reviews" in d.message for d in result.diagnostics)


def test_missing_header_column_is_schema_error():
    text = ingest.corpus_to_csv([make_listing()])
    header, rows = text.split("\n", 1)
    broken = header.replace("price", "cost") + "\n" + rows
    with pytest.raises(CorpusSchemaError) as err:
        ingest.parse_corpus(broken, "csv")
    assert "price" in err.value.missing


def test_sub_ratings_are_optional_columns():
    listings = [make_listing()]
    text = ingest.corpus_to_csv(listings)
    lines = text.splitlines()
    cols = lines[0].split(",")
    keep = [i for i, c in enumerate(cols) if not c.endswith("_rating") or c == "avg_rating"]
    import csv as _csv
    import io
    rows = list(_csv.reader(io.StringIO(text)))
    slim = "\n".join(",".join(r[i] for i in keep) for r in rows)
    result = ingest.parse_corpus(slim, "csv")
    assert len(result.listings) == 1
    assert result.listings[0].print_quality_rating is None


def test_bad_cell_reports_row_and_field():
    text = ingest.corpus_to_csv([make_listing()]).replace("200.0", "tall")
    result = ingest.parse_corpus(text, "csv")
    d = result.diagnostics[0]
    assert d.row == 0 and d.field == "resolution"


class TestSynthetic:
    def test_determinism_byte_identical(self):
        cfg = ingest.SynthConfig(n_listings=200, region="EU", seed=42)
        a = ingest.corpus_to_csv(ingest.generate_synthetic(cfg))
        b = ingest.corpus_to_csv(ingest.generate_synthetic(cfg))
        assert a == b

    def test_empty_corpus_rejected(self):
        with pytest.raises(CorpusError):
            ingest.SynthConfig(n_listings=0).resolved()

    def test_bad_mix_rejected(self):
        cfg = ingest.SynthConfig(
            n_listings=10, process_mix={"FDM": 0.5, "SLA": 0.4}
        )
        with pytest.raises(ConfigError):
            cfg.resolved()

    def test_us_defaults_match_observed_marginals(self):
        cfg = ingest.SynthConfig(n_listings=5000, region="US", seed=1)
        listings = ingest.generate_synthetic(cfg)
        printers = ingest._load_data_json("printers.json")
        fdm = sum(
            1 for l in listings if printers[l.printer_model]["process"] == "FDM"
        ) / len(listings)
        assert abs(fdm - 0.84) <= 0.02
        materials = ingest._load_data_json("materials.json")
        family = {"ABS", "PLA", "SpecialtyABS", "SpecialtyPLA"}
        share = sum(
            1 for l in listings if materials[l.material_name] in family
        ) / len(listings)
        assert abs(share - 0.54) <= 0.03

    def test_price_range_and_right_skew(self):
        cfg = ingest.SynthConfig(n_listings=5000, region="US", seed=3)
        prices = np.array([l.price for l in ingest.generate_synthetic(cfg)])
        assert prices.min() >= 2.36 and prices.max() <= 1956.0
        skew = ((prices - prices.mean()) ** 3).mean() / prices.std() ** 3
        assert skew > 1.0

    def test_printer_cost_right_skewed_within_range(self, printer_table):
        from pricegrid.features import lookup_printer

        cfg = ingest.SynthConfig(n_listings=5000, region="US", seed=5)
        costs = np.array(
            [lookup_printer(l.printer_model, printer_table).cost
             for l in ingest.generate_synthetic(cfg)]
        )
        assert costs.min() >= 175.0 and costs.max() <= 1.5e6
        skew = ((costs - costs.mean()) ** 3).mean() / costs.std() ** 3
        assert skew > 1.0

    def test_every_generated_listing_valid_across_seeds(self):
        for seed in range(6):
            cfg = ingest.SynthConfig(n_listings=150, region="EU", seed=seed)
            for lst in ingest.generate_synthetic(cfg):
                assert ingest.validate_listing(lst) == []

    def test_config_json_round_trip(self):
        cfg = ingest.SynthConfig(n_listings=10, region="EU", seed=9).resolved()
        again = ingest.SynthConfig.from_json(json.loads(json.dumps(cfg.to_json())))
        assert again == cfg

    def test_unknown_config_key_rejected(self):
        with pytest.raises(ConfigError):
            ingest.SynthConfig.from_json({"n_listings": 5, "n_suppliers": 3})


class TestStats:
    def test_empty_corpus_errors(self):
        with pytest.raises(CorpusError):
            ingest.corpus_stats([])

    def test_degenerate_quantiles_single_listing(self):
        stats = ingest.corpus_stats([make_listing(price=10.0)])
        ps = stats["numeric"]["price"]
        assert ps["min"] == ps["q1"] == ps["median"] == ps["q3"] == ps["max"] == 10.0

    def test_process_frequencies_symmetric_pair(self, printer_table):
        from pricegrid.features import lookup_printer

        listings = [
            make_listing(listing_id="f", printer_model="printbot one"),
            make_listing(listing_id="s", printer_model="resinray s1"),
        ]
        stats = ingest.corpus_stats(
            listings,
            printer_process=lambda m: lookup_printer(m, printer_table).process,
        )
        assert stats["categorical"]["process"] == {"FDM": 0.5, "SLA": 0.5}

    def test_material_family_share_on_synthetic(self, material_table):
        from pricegrid.features import categorize_material

        cfg = ingest.SynthConfig(n_listings=5000, region="US", seed=11)
        listings = ingest.generate_synthetic(cfg)
        stats = ingest.corpus_stats(
            listings,
            material_category=lambda m: categorize_material(m, material_table),
        )
        table = stats["categorical"]["material_category"]
        family = sum(
            table.get(c, 0.0)
            for c in ("ABS", "PLA", "SpecialtyABS", "SpecialtyPLA")
        )
        assert abs(family - 0.54) <= 0.03
