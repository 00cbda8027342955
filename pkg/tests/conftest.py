from typing import Callable, Iterable, NamedTuple

import pytest

from brbsim.chains import Message, SignatureChain
from brbsim.cli import main
from brbsim.signatures import SignatureScheme, SigningOracle, create_chain, extend_chain, keygen
from brbsim.simulator import RunTrace, ScenarioConfig, run


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run the full-size campaigns"
    )


def pytest_collection_modifyitems(config: pytest.Config, items: Iterable[pytest.Item]) -> None:
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def scheme() -> SignatureScheme:
    return keygen(range(1, 5), 7)


@pytest.fixture
def oracle(scheme: SignatureScheme) -> SigningOracle:
    return scheme.oracle(scheme.ids)


@pytest.fixture
def make_chain(scheme: SignatureScheme) -> Callable[..., SignatureChain]:
    """``make_chain(b"m", 1, 2, 3)`` builds the valid chain m:1:2:3."""

    def build(payload: bytes, *signers: int) -> SignatureChain:
        chain = create_chain(scheme, Message(payload), signers[0])
        for pid in signers[1:]:
            chain = extend_chain(scheme, chain, pid)
        return chain

    return build


@pytest.fixture
def scenario() -> Callable[..., ScenarioConfig]:
    def build(**changes) -> ScenarioConfig:
        changes.setdefault("n", 4)
        changes.setdefault("t", 1)
        return ScenarioConfig(**changes)

    return build


@pytest.fixture
def good_trace() -> RunTrace:
    return run(ScenarioConfig(n=4, t=1))


class CliResult(NamedTuple):
    code: int
    out: str
    err: str


@pytest.fixture
def cli(capsys: pytest.CaptureFixture[str]) -> Callable[..., CliResult]:
    """``cli("run", "--n", "4", ...)`` runs the command line and captures its streams."""

    def invoke(*argv: str) -> CliResult:
        capsys.readouterr()
        code = main(list(argv))
        captured = capsys.readouterr()
        return CliResult(code, captured.out, captured.err)

    return invoke
