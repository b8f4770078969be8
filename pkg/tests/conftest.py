import numpy as np
import pytest

from physdrift.fermion import build_hubbard, classify_groups, jordan_wigner, load_fcidump
from physdrift.harness import bundled_fixture, load_system, reference_energies


@pytest.fixture(scope="session")
def h2_sq():
    return load_fcidump(bundled_fixture("h2_sto3g"))


@pytest.fixture(scope="session")
def h2(h2_sq):
    return jordan_wigner(h2_sq)


@pytest.fixture(scope="session")
def h2_groups(h2_sq):
    return classify_groups(h2_sq)


@pytest.fixture(scope="session")
def h3_sq():
    return load_fcidump(bundled_fixture("h3_chain"))


@pytest.fixture(scope="session")
def h3(h3_sq):
    return jordan_wigner(h3_sq)


@pytest.fixture(scope="session")
def h3_groups(h3_sq):
    return classify_groups(h3_sq)


@pytest.fixture(scope="session")
def hubbard2():
    return jordan_wigner(build_hubbard(2, 1.0, 4.0))


@pytest.fixture(scope="session")
def systems():
    """The bundled systems used by the acceptance checks, keyed by name."""
    specs = {
        "hubbard2": {"hubbard": {"sites": 2, "t_hop": 1.0, "u": 4.0}},
        "hubbard3": {"hubbard": {"sites": 3, "t_hop": 1.0, "u": 4.0}},
        "h2_sto3g": {"fcidump": "h2_sto3g"},
        "h3_chain": {"fcidump": "h3_chain"},
        "h4_chain": {"fcidump": "h4_chain"},
    }
    return {k: load_system(v) for k, v in specs.items()}


@pytest.fixture(scope="session")
def references():
    return reference_energies()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
