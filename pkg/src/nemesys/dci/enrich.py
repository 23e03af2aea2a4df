"""Offline, table-driven trace enrichment.

All lookups are local (CIDR tables, reverse-DNS map, TCP/IP stack
signatures) so enrichment is deterministic, idempotent and hermetic
under test. A missing match leaves the field absent, never errors.
"""

import ipaddress
from typing import Optional, Tuple

from .types import AttackTrace, EnrichedTrace, EnrichmentTables


def _longest_prefix(table, ip: Optional[str]):
    if ip is None:
        return None
    addr = ipaddress.ip_address(ip)
    for network, value in table:  # sorted longest-prefix-first at load
        if addr in network:
            return value
    return None


def fingerprint_os(tcp_meta: Optional[Tuple[int, int]], sigs) -> Optional[str]:
    """First signature row whose TTL range and window size match; table
    order is significant."""
    if tcp_meta is None:
        return None
    ttl, win = tcp_meta
    if ttl is None or win is None:
        return None
    for ttl_min, ttl_max, sig_win, label in sigs:
        if ttl_min <= ttl <= ttl_max and win == sig_win:
            return label
    return None


def enrich(trace: AttackTrace, tables: EnrichmentTables) -> EnrichedTrace:
    tcp_meta = None
    if trace.ttl is not None and trace.win is not None:
        tcp_meta = (trace.ttl, trace.win)
    return EnrichedTrace(
        base=trace,
        geo=_longest_prefix(tables.geo, trace.ip),
        asn=_longest_prefix(tables.asn, trace.ip),
        rdns=tables.rdns.get(trace.ip) if trace.ip else None,
        os_guess=fingerprint_os(tcp_meta, tables.os_sigs),
    )
