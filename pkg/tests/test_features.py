import numpy as np
import pytest

from conftest import make_listing
from pricegrid import features as feat
from pricegrid.errors import ConfigError, PrinterLookupError


class TestMaterials:
    def test_identity_mapping(self, material_table):
        assert feat.categorize_material("PLA", material_table) == "PLA"

    def test_soluble_example(self, material_table):
        assert (
            feat.categorize_material("High Impact Polystyrene", material_table)
            == "Soluble"
        )

    def test_unknown_falls_back_to_others(self, material_table):
        assert feat.categorize_material("unobtainium-9000", material_table) == "Others"

    def test_normalization_is_total_and_deterministic(self, material_table):
        assert feat.categorize_material("  PlA ", material_table) == "PLA"
        assert feat.categorize_material("", material_table) == "Others"

    def test_sixteen_categories(self):
        assert len(feat.MATERIAL_CATEGORIES) == 16


class TestPrinters:
    def test_lookup_returns_cost_and_process(self, printer_table):
        info = feat.lookup_printer("printbot one", printer_table)
        assert info.cost == 175.0 and info.process == "FDM"

    def test_metal_printer_is_laser_sintering(self, printer_table):
        assert feat.lookup_printer("metalfuse m2", printer_table).process == "LaserSintering"

    def test_unknown_model_raises_with_name(self, printer_table):
        with pytest.raises(PrinterLookupError) as err:
            feat.lookup_printer("mystery cube", printer_table)
        assert "mystery cube" in str(err.value)


class TestKeywords:
    def test_empty_text_all_zeros(self, keywords):
        assert feat.description_vector("", keywords).tolist() == [0, 0, 0, 0, 0]

    def test_logistics_and_additional_services(self, keywords):
        counts = feat.description_vector(
            "free shipping and laser cutting", keywords
        )
        by_cat = dict(zip(feat.KEYWORD_CATEGORIES, counts))
        assert by_cat["Logistics"] >= 1
        assert by_cat["AdditionalServices"] >= 1

    def test_counts_double_when_text_repeats(self, keywords):
        text = "we offer free shipping, 3d scanning and dental models."
        once = feat.description_vector(text, keywords)
        twice = feat.description_vector(text + " " + text, keywords)
        assert (twice == 2 * once).all()

    def test_phrase_matching_is_word_bounded(self, keywords):
        # "shipshape" must not match the "free shipping" phrase
        assert feat.description_vector("shipshape polishingly", keywords).sum() == 0

    def test_duplicate_keyword_across_categories_rejected(self):
        cats = {c: ("alpha",) if c in ("Logistics", "Experience") else (f"kw {c}",)
                for c in feat.KEYWORD_CATEGORIES}
        with pytest.raises(ConfigError):
            feat.KeywordDictionary(categories=cats)


@pytest.fixture(scope="module")
def fitted(material_table, printer_table, keywords):
    listings = [
        make_listing(listing_id="a", price=12.0, avg_rating=4.0,
                     num_reviews=4, resolution=100.0, num_machines=1,
                     avg_response_time=1.0, days_since_activation=100,
                     num_sample_images=2, order_completion_days=2.0),
        make_listing(listing_id="b", price=80.0, avg_rating=5.0,
                     num_reviews=20, resolution=200.0, num_machines=3,
                     avg_response_time=5.0, days_since_activation=900,
                     num_sample_images=8, order_completion_days=6.0,
                     printer_model="resinray s1", material_name="tough resin",
                     registered_business=True, latitude=34.0,
                     longitude=-118.2),
    ]
    geo = feat.kmeans_fit(
        np.array([(l.latitude, l.longitude) for l in listings]),
        k=2, seed=0, restarts=3,
    )
    schema = feat.fit_schema(
        listings, geo, printer_table, material_table, keywords
    )
    return listings, geo, schema


class TestSchema:
    def test_two_point_stats_match_hand_computation(self, fitted):
        _, _, schema = fitted
        by_name = {d.name: d for d in schema.descriptors if d.kind == "numeric"}
        d = by_name["resolution"]
        assert d.mean == pytest.approx(150.0)
        assert d.std == pytest.approx(50.0)  # population stddev of {100, 200}
        d = by_name["num_reviews"]
        assert d.mean == pytest.approx(12.0) and d.std == pytest.approx(8.0)

    def test_material_block_has_all_sixteen_levels(self, fitted):
        _, _, schema = fitted
        mat = [d for d in schema.descriptors if d.name == "material_category"][0]
        assert len(mat.levels) == len(feat.MATERIAL_CATEGORIES) == 16

    def test_schema_round_trip_encodes_identically(
        self, fitted, material_table, printer_table, keywords, tmp_path
    ):
        listings, geo, schema = fitted
        path = tmp_path / "schema.json"
        feat.save_schema(path, schema)
        again = feat.load_schema(path)
        assert again.fingerprint() == schema.fingerprint()
        x1 = feat.encode(listings[0], schema, geo, printer_table, material_table, keywords)
        x2 = feat.encode(listings[0], again, geo, printer_table, material_table, keywords)
        assert np.array_equal(x1, x2)

    def test_value_at_train_mean_encodes_to_zero(
        self, fitted, material_table, printer_table, keywords
    ):
        listings, geo, schema = fitted
        probe = make_listing(listing_id="probe", resolution=150.0)
        x = feat.encode(probe, schema, geo, printer_table, material_table, keywords)
        pos = schema.feature_names().index("resolution")
        assert x[pos] == pytest.approx(0.0)

    def test_one_hot_block_layout(self, fitted, material_table, printer_table, keywords):
        listings, geo, schema = fitted
        x = feat.encode(listings[1], schema, geo, printer_table, material_table, keywords)
        names = schema.feature_names()
        assert x[names.index("registered_business=true")] == 1.0
        assert x[names.index("registered_business=false")] == 0.0
        assert x[names.index("process=SLA")] == 1.0
        assert x[names.index("material_category=Resins")] == 1.0

    def test_full_encode_matches_manual_oracle(
        self, fitted, material_table, printer_table, keywords
    ):
        listings, geo, schema = fitted
        lst = listings[0]
        x = feat.encode(lst, schema, geo, printer_table, material_table, keywords)
        values = feat.derive_values(lst, geo, printer_table, material_table, keywords)
        pos = 0
        for d in schema.descriptors:
            if d.kind == "numeric":
                assert x[pos] == (values[d.name] - d.mean) / d.std
                pos += 1
            else:
                block = x[pos : pos + len(d.levels)]
                expect = np.zeros(len(d.levels))
                expect[d.levels.index(values[d.name])] = 1.0
                assert np.array_equal(block, expect)
                pos += len(d.levels)
        assert pos == schema.arity

    def test_training_set_standardizes_to_unit_stats(
        self, material_table, printer_table, keywords
    ):
        from pricegrid.ingest import SynthConfig, generate_synthetic

        listings = generate_synthetic(SynthConfig(n_listings=300, seed=2))
        geo = feat.kmeans_fit(
            np.array([(l.latitude, l.longitude) for l in listings]),
            k=6, seed=0, restarts=5,
        )
        schema = feat.fit_schema(listings, geo, printer_table, material_table, keywords)
        X, _ = feat.encode_corpus(
            listings, schema, geo, printer_table, material_table, keywords
        )
        n_numeric = sum(1 for d in schema.descriptors if d.kind == "numeric")
        numerics = X[:, :n_numeric]
        assert np.abs(numerics.mean(axis=0)).max() < 1e-9
        assert np.abs(numerics.std(axis=0) - 1.0).max() < 1e-9
        assert np.isfinite(X).all()

    def test_constant_column_dropped_with_diagnostic(
        self, material_table, printer_table, keywords
    ):
        listings = [
            make_listing(listing_id="a", latitude=40.0, price=10.0),
            make_listing(listing_id="b", latitude=41.0, price=20.0),
        ]
        geo = feat.kmeans_fit(np.array([(40.0, -74.0), (41.0, -74.0)]), 2, seed=0, restarts=2)
        notes = []
        schema = feat.fit_schema(
            listings, geo, printer_table, material_table, keywords, diagnostics=notes
        )
        names = [d.name for d in schema.descriptors]
        assert "resolution" not in names  # both listings share 200.0
        assert any("resolution" in n for n in notes)

    def test_unknown_level_encodes_all_zero_block(
        self, fitted, material_table, printer_table, keywords
    ):
        listings, geo, schema = fitted
        # a geo model with more clusters than the schema knows about
        geo_big = feat.GeoModel(
            k=5, centroids=np.array([[0.0, 0.0]] * 4 + [[34.0, -118.2]]),
            region="US", seed=0, inertia=0.0, n_iter=1,
            inertia_trace=np.array([0.0]),
        )
        notes = []
        x = feat.encode(
            listings[1], schema, geo_big, printer_table, material_table,
            keywords, diagnostics=notes,
        )
        names = schema.feature_names()
        block = [x[i] for i, n in enumerate(names) if n.startswith("geo_cluster=")]
        assert sum(block) == 0.0
        assert any("unknown level" in n for n in notes)
