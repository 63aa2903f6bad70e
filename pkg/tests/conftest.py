"""Session-scoped fixtures for the expensive synthetic-image artifacts."""

import pytest

from planesym.synth import (
    TRIO_DELTA,
    TRIO_GROUP,
    TRIO_PSEUDO,
    MotifSpec,
    generate_pattern,
    paper_trio,
)

from helpers import TRIO_DYNAMIC_RANGE, TRIO_RESOLUTION_RADIUS, classify_image


@pytest.fixture(scope="session")
def trio_images():
    """The pinned-seed benchmark series (clean / moderate / heavy)."""
    return paper_trio()


@pytest.fixture(scope="session")
def trio_base():
    """The noise-free pattern underlying the benchmark series."""
    return generate_pattern(MotifSpec(
        group=TRIO_GROUP,
        pseudo_delta=TRIO_DELTA,
        pseudo_group=TRIO_PSEUDO,
    ))


@pytest.fixture(scope="session")
def trio_results(trio_images):
    return {
        name: classify_image(
            image,
            dynamic_range=TRIO_DYNAMIC_RANGE,
            resolution_radius=TRIO_RESOLUTION_RADIUS,
        )
        for name, image in trio_images.items()
    }


@pytest.fixture(scope="session")
def small_p4():
    """A cheap exact fourfold pattern with its classification, reused by
    the CLI, report and processing tests."""
    image = generate_pattern(MotifSpec(group="p4", cell_px=32, cells=6))
    result = classify_image(image)
    return {"image": image, "result": result}
