"""K-way merge of named, internally time-ordered trace feeds."""

import heapq
from typing import Iterable, Iterator, List, Tuple

from ..errors import UnorderedFeed
from .types import AttackTrace


def aggregate_sources(feeds: List[Tuple[str, Iterable[AttackTrace]]]) -> Iterator[AttackTrace]:
    """Merge by timestamp; ties break on (feed name, feed-local index), so
    the merge is lossless and fully deterministic."""
    iterators = []
    for name, feed in sorted(feeds, key=lambda item: item[0]):
        iterators.append((name, iter(feed)))

    heap = []
    last_seen = {}
    for name, it in iterators:
        first = next(it, None)
        if first is not None:
            heap.append((first.ts_ms, name, 0, first, it))
            last_seen[name] = first.ts_ms
    heapq.heapify(heap)

    while heap:
        ts, name, index, record, it = heapq.heappop(heap)
        yield record
        following = next(it, None)
        if following is not None:
            if following.ts_ms < last_seen[name]:
                raise UnorderedFeed(name)
            last_seen[name] = following.ts_ms
            heapq.heappush(heap, (following.ts_ms, name, index + 1, following, it))
