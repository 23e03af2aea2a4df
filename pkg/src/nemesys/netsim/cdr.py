"""Billing record emission with keyed anonymization."""

import hmac
import hashlib
from dataclasses import dataclass
from decimal import Decimal, ROUND_HALF_EVEN

from .types import ChargingDataRecord, Service

DEFAULT_TARIFFS = {
    Service.VOICE: Decimal("0.50"),  # units per minute
    Service.DATA: Decimal("0.01"),  # units per megabyte
    Service.SMS: Decimal("1"),  # units per message
    Service.PREMIUM_SMS: Decimal("10"),  # units per message
}

_QUANTUM = Decimal("0.0001")


@dataclass(frozen=True)
class SessionRecord:
    """A closed billable session, before anonymization and pricing."""

    ue_id: str
    service: Service
    start_ts: float
    end_ts: float
    bytes_up: int
    bytes_down: int
    peer: str
    cell_id: str
    messages: int = 0  # billed message count for SMS-type services

    def __post_init__(self):
        if self.end_ts < self.start_ts:
            raise ValueError("session end precedes start")


def anonymize_ue(ue_id: str, hash_key: bytes) -> str:
    return hmac.new(hash_key, ue_id.encode(), hashlib.blake2b).hexdigest()[:16]


def usage_quantity(session: SessionRecord) -> Decimal:
    if session.service is Service.VOICE:
        return Decimal(str(session.end_ts - session.start_ts)) / Decimal(60)
    if session.service is Service.DATA:
        return Decimal(session.bytes_up + session.bytes_down) / Decimal(1_000_000)
    return Decimal(session.messages)


def emit_cdr(
    session: SessionRecord,
    hash_key: bytes,
    record_id: int = 0,
    tariffs: dict = None,
) -> ChargingDataRecord:
    """Price and anonymize one closed session."""
    table = DEFAULT_TARIFFS if tariffs is None else tariffs
    charge = (table[session.service] * usage_quantity(session)).quantize(
        _QUANTUM, rounding=ROUND_HALF_EVEN
    )
    return ChargingDataRecord(
        record_id=record_id,
        ue_id=anonymize_ue(session.ue_id, hash_key),
        service=session.service,
        start_ts=session.start_ts,
        duration=session.end_ts - session.start_ts,
        bytes_up=session.bytes_up,
        bytes_down=session.bytes_down,
        peer=session.peer,
        charge_units=charge,
        cell_id=session.cell_id,
    )


def format_charge(value: Decimal) -> str:
    """Canonical decimal text: fixed-point, trailing zeros trimmed."""
    text = format(value, "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text or "0"
