"""Priority queues and the visited set forming a query's working state.

All orderings are lexicographic on (distance, id) so that ties are broken
deterministically; the bounded queue therefore holds exactly the k
smallest (distance, id) pairs among the distinct ids pushed so far.
"""

import heapq
import math

INFINITY = math.inf


class KnnQueue:
    """Bounded set of the best (distance, id) pairs seen so far.

    At most `capacity` entries are retained; ids are unique.  The farthest
    retained pair is evicted when a strictly better pair arrives.
    """

    def __init__(self, capacity):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._heap = []  # (-dist, -id): the root is the worst retained pair
        self._dists = {}  # id -> dist

    def __len__(self):
        return len(self._heap)

    def __contains__(self, item_id):
        return item_id in self._dists

    @property
    def full(self):
        return len(self._heap) >= self.capacity

    def push(self, dist, item_id):
        """Offer a pair; returns True iff it was retained."""
        if not math.isfinite(dist):
            raise ValueError(f"distance must be finite, got {dist}")
        old = self._dists.get(item_id)
        if old is not None:
            if dist >= old:
                return False
            # improving duplicate: drop the stale entry, then re-insert
            self._heap.remove((-old, -item_id))
            heapq.heapify(self._heap)
            del self._dists[item_id]
        if len(self._heap) < self.capacity:
            heapq.heappush(self._heap, (-dist, -item_id))
            self._dists[item_id] = dist
            return True
        worst_dist, worst_id = -self._heap[0][0], -self._heap[0][1]
        if (dist, item_id) < (worst_dist, worst_id):
            heapq.heapreplace(self._heap, (-dist, -item_id))
            del self._dists[worst_id]
            self._dists[item_id] = dist
            return True
        return False

    def covering_radius(self):
        """Distance to the farthest retained pair, or infinity while the
        queue is not yet full."""
        if len(self._heap) < self.capacity:
            return INFINITY
        return -self._heap[0][0]

    def merge_from(self, other):
        """Fold another queue of the same capacity into this one."""
        if other.capacity != self.capacity:
            raise ValueError(
                f"capacity mismatch: {self.capacity} vs {other.capacity}"
            )
        for dist, item_id in other.items():
            self.push(dist, item_id)
        return self

    def items(self):
        """Retained pairs in ascending (dist, id) order."""
        return sorted((d, i) for i, d in self._dists.items())

    def __iter__(self):
        return iter(self.items())


def merge_into(dst, src):
    """Module-level alias for KnnQueue.merge_from."""
    return dst.merge_from(src)


class CandidateQueue:
    """Unbounded nearest-first queue of (distance, id) pairs."""

    def __init__(self):
        self._heap = []

    def __len__(self):
        return len(self._heap)

    def push(self, dist, item_id):
        heapq.heappush(self._heap, (dist, item_id))

    def pop_nearest(self):
        """Remove and return the minimal (dist, id) pair."""
        if not self._heap:
            raise ValueError("pop from empty candidate queue")
        return heapq.heappop(self._heap)


class VisitedSet:
    """Membership set over item ids; insertion is idempotent."""

    def __init__(self):
        self._members = set()

    def add(self, item_id):
        self._members.add(item_id)

    def __contains__(self, item_id):
        return item_id in self._members

    def __len__(self):
        return len(self._members)
