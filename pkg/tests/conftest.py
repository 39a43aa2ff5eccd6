from __future__ import annotations

import json
from pathlib import Path

import pytest

from codescaffold.config import Principal, ProviderConfig, ServiceConfig
from codescaffold.providers import StubProvider
from codescaffold.runner import ResourceLimits
from codescaffold.service import ScaffoldService
from codescaffold.taskbank import TaskBank, load_task_pack

FIXTURES = Path(__file__).parent / "fixtures"

# Tight budget keeps the suite quick; individual tests override when a case
# needs the spec defaults.
FAST_LIMITS = ResourceLimits(cpu_ms=1500, memory_mib=64, output_limit_kib=16)


def fixture_text(relative: str) -> str:
    return (FIXTURES / relative).read_text(encoding="utf-8")


@pytest.fixture(scope="session")
def corpus():
    return json.loads(fixture_text("taxonomy_corpus.json"))["pairs"]


@pytest.fixture(scope="session")
def pack_document():
    return fixture_text("packs/intro_pack.json")


@pytest.fixture(scope="session")
def intro_pack(pack_document):
    return load_task_pack(pack_document)


@pytest.fixture(scope="session")
def ingested_bank(intro_pack):
    bank = TaskBank()
    bank.ingest(intro_pack)
    return bank


def provider_doc(name: str) -> str:
    return fixture_text(f"provider_docs/{name}")


class RepeatingStub:
    """Thread-safe stub that answers every prompt with the same document."""

    def __init__(self, document: str, provider_id: str = "stub-repeat"):
        self.id = provider_id
        self.document = document
        self.prompts: list[str] = []

    def complete(self, prompt: str) -> str:
        self.prompts.append(prompt)
        return self.document


class FakeClock:
    def __init__(self, start: float = 1_000_000.0):
        self.now = start

    def __call__(self) -> float:
        return self.now

    def advance(self, seconds: float) -> None:
        self.now += seconds


ROSTER = {
    "tok-alice": Principal(id="alice", role="student"),
    "tok-bob": Principal(id="bob", role="student"),
    "tok-prof": Principal(id="prof", role="instructor"),
}


def make_service(pack_document: str | None = None, provider=None,
                 course_mode: str = "auto_accept", clock=None,
                 pool_size: int = 4, pool_queue: int = 0,
                 roster: dict | None = None) -> ScaffoldService:
    config = ServiceConfig(
        course_mode=course_mode,
        pool_size=pool_size,
        pool_queue=pool_queue,
        provider=ProviderConfig(mode="stub"),
        roster=ROSTER if roster is None else roster,
    )
    service = ScaffoldService(
        config=config,
        provider=provider if provider is not None else StubProvider([]),
        clock=clock if clock is not None else FakeClock(),
    )
    if pack_document is not None:
        service.ingest_pack(pack_document)
    return service


@pytest.fixture()
def fake_clock():
    return FakeClock()


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else "FAIL"
        print(f"\n[ACCEPTANCE] {name}: {outcome}", flush=True)
