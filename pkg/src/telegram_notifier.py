"""
Run reports over the Telegram Bot API.

Long searches finish hours after they start; when ``--notify`` is given the
result summary is pushed to the configured chat with plain ``aiohttp``
requests. Delivery problems are logged and never fail the run.
"""

from __future__ import annotations

import asyncio
import logging

import aiohttp

from src.config import TELEGRAM_API_URL, TELEGRAM_BOT_TOKEN, TELEGRAM_CHAT_ID, TELEGRAM_TIMEOUT
from src.records import RunRecord

logger = logging.getLogger(__name__)


# ── Helpers ──────────────────────────────────────────────────────────────────

def format_report(record: RunRecord) -> str:
    """
    Build the message text.

    Format:  header line
             factorization
             t with its enclosure, statistics, wall time
    """
    stats = record.stats
    lo, hi = float(record.t_enclosure.lo), float(record.t_enclosure.hi)
    return (
        f"ICP search: degree {record.degree} ({record.config.mode})\n"
        f"p = {record.factored}\n"
        f"t = {record.t}  [{lo:.10f}, {hi:.10f}]\n"
        f"nodes {stats.nodes_dequeued} (pruned {stats.nodes_pruned}), "
        f"vectors {stats.vectors_enumerated}, norms {stats.candidates_normed}\n"
        f"wall time {record.wall_time:.1f}s"
    )


# ── Public API ───────────────────────────────────────────────────────────────

async def send_run_report(record: RunRecord) -> bool:
    """Send one report message; returns True when Telegram accepted it."""
    if not TELEGRAM_BOT_TOKEN or not TELEGRAM_CHAT_ID:
        logger.error("TELEGRAM_BOT_TOKEN or TELEGRAM_CHAT_ID is not set; report skipped.")
        return False

    send_url = f"{TELEGRAM_API_URL}/sendMessage"
    payload = {"chat_id": TELEGRAM_CHAT_ID, "text": format_report(record)}
    timeout = aiohttp.ClientTimeout(total=TELEGRAM_TIMEOUT)
    async with aiohttp.ClientSession(timeout=timeout) as session:
        try:
            async with session.post(send_url, json=payload) as resp:
                if resp.status == 200:
                    logger.info("Run report sent to Telegram.")
                    return True
                body = await resp.text()
                logger.error("Telegram API error %d: %s", resp.status, body)
        except (aiohttp.ClientError, asyncio.TimeoutError) as exc:
            logger.error("Network error sending run report: %s", exc)
    return False
