"""Shared fixtures-on-disk paths and an in-process stand-in model."""

from __future__ import annotations

from pathlib import Path

import tremu
from tremu.gateway import Gateway

DATA = Path(tremu.__file__).parent / "data"
MINI = DATA / "mini"
CASES = DATA / "cases"
GOLDEN = Path(__file__).parent / "golden"


class FakeModel:
    """Callable model: ``respond(request)`` decides each reply; requests are kept."""

    name = "fake"

    def __init__(self, respond):
        self.respond = respond
        self.requests = []

    def __call__(self, req):
        self.requests.append(req)
        return self.respond(req)


def fake_gateway(respond) -> tuple[Gateway, FakeModel]:
    model = FakeModel(respond)
    return Gateway("live", live=model), model


def replay(root: Path) -> Gateway:
    return Gateway("replay", root / "fixtures")
