import pytest

from certicd.scenes import BoxUnionScene, DiscScene, load_scene


@pytest.fixture(scope="session")
def disc():
    return DiscScene(center=(0.5, 0.5), radius=0.25)


@pytest.fixture(scope="session")
def boxes():
    return load_scene("boxes")


@pytest.fixture(scope="session")
def two_link():
    # The shipped scene builds its clearance grid lazily; share one instance.
    return load_scene("two-link")


@pytest.fixture
def small_boxes():
    return BoxUnionScene([(0.2, 0.2, 0.4, 0.5), (0.6, 0.1, 0.9, 0.3)])


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for number in sorted(results):
            terminalreporter.write_line(results[number])
