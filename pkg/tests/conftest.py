import pytest

from tropic.contraction import build_atlas
from tropic.problem import builtin
from tropic.tropical import TropicalCI, nef_polynomials


@pytest.fixture(scope="session")
def quartic():
    return builtin("quartic-k3")


@pytest.fixture(scope="session")
def quintic():
    return builtin("quintic")


@pytest.fixture(scope="session")
def k323():
    return builtin("k3-2-3")


def trop_ci(P):
    return TropicalCI(nef_polynomials(P.nef.parts, P.h_check), P.sigma_prime, seed=P.seed)


@pytest.fixture(scope="session")
def quartic_X(quartic):
    return trop_ci(quartic)


@pytest.fixture(scope="session")
def quartic_atlas(quartic, quartic_X):
    return build_atlas(quartic.B, quartic_X)


_acceptance = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """Lines collected by the acceptance suite, printed in the terminal summary."""
    return request.config.stash.setdefault(_acceptance, [])


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_acceptance, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
