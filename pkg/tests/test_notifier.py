import asyncio
from fractions import Fraction

import aiohttp
import pytest

from src import telegram_notifier
from src.records import EnclosureRecord, RunRecord, SearchConfig, SearchStats


@pytest.fixture
def record() -> RunRecord:
    return RunRecord(
        config=SearchConfig(n=2),
        degree=2,
        odd=False,
        known_factor=[1],
        missing_factor=[0, 1],
        factored="h1",
        cofactor=[1],
        coefficients=[0, 1, -1],
        norm=EnclosureRecord(lo=Fraction(1, 4), hi=Fraction(1, 4)),
        t="0.50000000",
        t_enclosure=EnclosureRecord(lo=Fraction(1, 2), hi=Fraction(1, 2)),
        stats=SearchStats(nodes_dequeued=3, vectors_enumerated=7),
        wall_time=1.5,
    )


class _Response:
    def __init__(self, status: int) -> None:
        self.status = status

    async def text(self) -> str:
        return "bad request"

    async def __aenter__(self):
        return self

    async def __aexit__(self, *exc):
        return False


class _Session:
    posted: list = []
    status = 200
    error: Exception | None = None

    def __init__(self, timeout=None) -> None:
        self.timeout = timeout

    def post(self, url, json):
        if self.error is not None:
            raise self.error
        self.posted.append((url, json))
        return _Response(self.status)

    async def __aenter__(self):
        return self

    async def __aexit__(self, *exc):
        return False


@pytest.fixture
def session(monkeypatch):
    _Session.posted = []
    _Session.status = 200
    _Session.error = None
    monkeypatch.setattr(telegram_notifier.aiohttp, "ClientSession", _Session)
    monkeypatch.setattr(telegram_notifier, "TELEGRAM_BOT_TOKEN", "123:abc")
    monkeypatch.setattr(telegram_notifier, "TELEGRAM_CHAT_ID", "42")
    monkeypatch.setattr(telegram_notifier, "TELEGRAM_API_URL", "https://api.telegram.org/bot123:abc")
    return _Session


def test_format_report(record):
    text = telegram_notifier.format_report(record)
    assert "degree 2" in text
    assert "p = h1" in text
    assert "t = 0.50000000" in text
    assert "vectors 7" in text


def test_report_is_sent(record, session):
    assert asyncio.run(telegram_notifier.send_run_report(record))
    [(url, payload)] = session.posted
    assert url.endswith("/sendMessage")
    assert payload["chat_id"] == "42"


def test_api_error_is_logged_not_raised(record, session, caplog):
    session.status = 400
    assert not asyncio.run(telegram_notifier.send_run_report(record))
    assert "Telegram API error 400" in caplog.text


def test_network_error_is_logged_not_raised(record, session):
    session.error = aiohttp.ClientConnectionError("offline")
    assert not asyncio.run(telegram_notifier.send_run_report(record))


def test_missing_credentials_skip_the_report(record, monkeypatch):
    monkeypatch.setattr(telegram_notifier, "TELEGRAM_BOT_TOKEN", "")
    assert not asyncio.run(telegram_notifier.send_run_report(record))
