import pytest

from coverage_lab import paper_example, paper_example_identified


@pytest.fixture(scope="session")
def paper():
    return paper_example(1.0)


@pytest.fixture(scope="session")
def paper_restricted():
    return paper_example_identified(1.0)
