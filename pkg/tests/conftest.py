import numpy as np
import pytest

from pricegrid import features as feat
from pricegrid.ingest import RawListing


@pytest.fixture(scope="session")
def material_table():
    return feat.load_material_table()


@pytest.fixture(scope="session")
def printer_table():
    return feat.load_printer_table()


@pytest.fixture(scope="session")
def keywords():
    return feat.load_keywords()


def make_listing(**overrides) -> RawListing:
    """A valid listing with sensible defaults; override any field."""
    base = dict(
        listing_id="l-1",
        region="US",
        latitude=40.7,
        longitude=-74.0,
        avg_rating=4.5,
        num_reviews=12,
        avg_response_time=2.5,
        days_since_activation=400,
        num_machines=2,
        registered_business=False,
        description_text="fast turnaround and free shipping",
        num_sample_images=5,
        printer_model="printbot one",
        material_name="PLA",
        resolution=200.0,
        order_completion_days=3.0,
        price=25.0,
    )
    base.update(overrides)
    return RawListing(**base)


def assert_kkt(model, tol=None):
    """Training-run audit: exact dual constraint, exact box, violation <= tol."""
    d = model.diag
    assert d is not None
    assert d.sum_nu == 0.0, f"sum(alpha*y) = {d.sum_nu}"
    alpha = model.coeffs * np.where(model.coeffs >= 0, 1.0, -1.0)
    # coeffs are alpha*y; support alphas must sit inside the (snapped) box
    assert (alpha >= 0.0).all()
    caps = np.where(model.coeffs > 0, d.cq_pos, d.cq_neg)
    assert (alpha <= caps).all()
    limit = 1e-3 if tol is None else tol
    assert d.violation <= limit, f"KKT violation {d.violation} > {limit}"
