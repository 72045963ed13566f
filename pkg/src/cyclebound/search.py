"""Exhaustive cycle search.

Two independent routes:

* iteration: apply the map ``k`` times to every odd candidate up to a horizon.
  For the positive map the horizon comes from the minimum bound, so an empty
  result proves there is no positive ``k``-cycle at all.
* exponent sequences: enumerate valuation sequences with a given total and
  solve the cycle equation for each one.

Each cycle is reported once, anchored at its minimum.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, Iterator, List, Optional, Tuple

from .algebra import (
    CycleCertificate,
    certificate_from_orbit,
    cycle_equation_solve,
    horizon as bound_horizon,
    minimal_period,
    verify_certificate,
)
from .maps import Variant, exponent_sequence

DEFAULT_CHUNK_SIZE = 1 << 16


class CheckpointMismatch(RuntimeError):
    """The checkpoint on disk belongs to a different search configuration."""


@dataclass
class SearchConfig:
    variant: Variant = Variant.POS
    k_min: int = 2
    k_max: int = 2
    limit_override: Optional[int] = None
    worker_count: int = 1
    chunk_size: int = DEFAULT_CHUNK_SIZE
    checkpoint_path: Optional[Path] = None
    loose_horizon: bool = False

    def validate(self) -> None:
        self.variant = Variant.parse(self.variant)
        if self.k_min < 1 or self.k_max < self.k_min:
            raise ValueError(f"need 1 <= k_min <= k_max, got k_min={self.k_min}, k_max={self.k_max}")
        if self.variant is Variant.POS and self.k_min < 2:
            raise ValueError("positive search needs k_min >= 2 (the horizon is only defined for k >= 2)")
        if self.variant is Variant.NEG and self.limit_override is None:
            raise ValueError("negative search needs an explicit limit; no proven horizon exists")
        if self.limit_override is not None and self.limit_override < 1:
            raise ValueError(f"limit must be >= 1, got {self.limit_override}")
        if self.worker_count < 1:
            raise ValueError(f"worker_count must be >= 1, got {self.worker_count}")
        if self.chunk_size < 1:
            raise ValueError(f"chunk_size must be >= 1, got {self.chunk_size}")

    def echo(self) -> dict:
        """Fields that determine the result (worker and chunk settings excluded)."""
        return {
            "variant": self.variant.value,
            "k_min": self.k_min,
            "k_max": self.k_max,
            "limit": None if self.limit_override is None else str(self.limit_override),
            "loose_horizon": self.loose_horizon,
        }

    def config_hash(self) -> str:
        blob = json.dumps(self.echo(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def horizon(self, k: int) -> int:
        if self.limit_override is not None:
            return self.limit_override
        return bound_horizon(k, self.loose_horizon)


@dataclass
class KResult:
    k: int
    horizon: Optional[int]
    candidates: int
    cycles: List[CycleCertificate] = field(default_factory=list)
    complete: bool = False
    notes: List[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "horizon": None if self.horizon is None else str(self.horizon),
            "candidates": self.candidates,
            "complete": self.complete,
            "cycles": [c.to_json() for c in self.cycles],
            "notes": list(self.notes),
        }


@dataclass
class SearchReport:
    method: str
    config: dict
    results: List[KResult] = field(default_factory=list)
    wall_time: float = 0.0
    interrupted: bool = False

    @property
    def complete(self) -> bool:
        return bool(self.results) and all(r.complete for r in self.results)

    @property
    def cycles(self) -> List[CycleCertificate]:
        return [c for r in self.results for c in r.cycles]

    def to_json(self, include_timing: bool = False) -> dict:
        doc = {
            "method": self.method,
            "config": self.config,
            "results": [r.to_json() for r in self.results],
            "complete": self.complete,
            "interrupted": self.interrupted,
        }
        if include_timing:
            doc["wall_time"] = round(self.wall_time, 3)
        return doc

    def dumps(self) -> str:
        """Canonical serialization; identical for identical search outcomes."""
        return json.dumps(self.to_json(), sort_keys=True, indent=2)


def scan_chunk(task: Tuple[int, int, int, int]) -> List[int]:
    """Return every odd ``a`` in ``[start, stop)`` that is the minimum of a ``k``-cycle.

    A candidate is dropped as soon as an iterate falls below it (it is not
    the cycle minimum; the cycle is found from its minimum instead) or
    returns to it early (its period is smaller than ``k``).
    """
    start, stop, k, sign = task
    found = []
    last = k - 1
    for a in range(start, stop, 2):
        x = a
        for i in range(k):
            x = 3 * x + sign
            x >>= (x & -x).bit_length() - 1
            if x <= a:
                if x == a and i == last:
                    found.append(a)
                break
    return found


def _chunks(cursor: int, limit: int, size: int, k: int, sign: int) -> Iterator[Tuple[int, int, int, int]]:
    end = limit + 2 if limit % 2 else limit + 1  # exclusive, odd
    while cursor < end:
        stop = min(cursor + 2 * size, end)
        yield cursor, stop, k, sign
        cursor = stop


def _odd_count(limit: int) -> int:
    return (limit + 1) // 2 if limit > 0 else 0


# -- checkpoint file ---------------------------------------------------------

class CheckpointFile:
    """Line-delimited JSON, one record per completed chunk, rewritten atomically.

    A record whose chunk found nothing is superseded by the next record for
    the same ``k``, so the file stays small on long runs.
    """

    def __init__(self, path: Path, config_hash: str):
        self.path = Path(path)
        self.config_hash = config_hash
        self.lines: List[str] = []
        self._empty_at: Dict[int, int] = {}  # k -> index of its trailing found-nothing record

    def load(self) -> Dict[int, Tuple[int, List[CycleCertificate]]]:
        """Per-k ``(next_candidate, found)``; raises CheckpointMismatch on a foreign file."""
        state: Dict[int, Tuple[int, List[CycleCertificate]]] = {}
        if not self.path.exists():
            return state
        for lineno, raw in enumerate(self.path.read_text().splitlines(), 1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
                h, k, nxt = rec["config_hash"], int(rec["k"]), int(rec["next_candidate"])
                found = [CycleCertificate.from_json(c) for c in rec["found"]]
            except (ValueError, KeyError, TypeError) as exc:
                raise CheckpointMismatch(f"{self.path}:{lineno}: unreadable record ({exc})") from None
            if h != self.config_hash:
                raise CheckpointMismatch(
                    f"{self.path} was written by a different configuration "
                    f"(hash {h[:12]}..., expected {self.config_hash[:12]}...)")
            prev = state.get(k, (1, []))
            state[k] = (max(prev[0], nxt), prev[1] + found)
            self._store(k, raw, bool(found))
        return state

    def _store(self, k: int, line: str, has_found: bool) -> None:
        i = self._empty_at.pop(k, None)
        if i is not None:
            self.lines[i] = line
        else:
            i = len(self.lines)
            self.lines.append(line)
        if not has_found:
            self._empty_at[k] = i

    def append(self, k: int, next_candidate: int, found: List[CycleCertificate]) -> None:
        rec = {
            "config_hash": self.config_hash,
            "k": k,
            "next_candidate": str(next_candidate),
            "found": [c.to_json() for c in found],
        }
        self._store(k, json.dumps(rec, sort_keys=True, separators=(",", ":")), bool(found))
        tmp = self.path.with_name(self.path.name + ".tmp")
        with open(tmp, "w") as fh:
            fh.write("\n".join(self.lines) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self.path)


# -- iteration engine ----------------------------------------------------------

ProgressFn = Callable[[int, int, int], None]


def _ordered_map(tasks: Iterator, workers: int, pool: Optional[ProcessPoolExecutor]):
    """Yield ``(task, scan_chunk(task))`` in task order, keeping a bounded window in flight."""
    if pool is None:
        for t in tasks:
            yield t, scan_chunk(t)
        return
    window: deque = deque()
    for t in tasks:
        window.append((t, pool.submit(scan_chunk, t)))
        if len(window) >= 4 * workers:
            t0, fut = window.popleft()
            yield t0, fut.result()
    while window:
        t0, fut = window.popleft()
        yield t0, fut.result()


def _certify(a: int, k: int, variant: Variant) -> CycleCertificate:
    cert = certificate_from_orbit(a, k, variant)
    rep = verify_certificate(cert)
    if not rep.ok:
        raise RuntimeError(f"emitted certificate for a={a}, k={k} failed verification: {rep.failures}")
    return cert


def run(config: SearchConfig, resume: bool = False, progress: Optional[ProgressFn] = None,
        max_chunks: Optional[int] = None) -> SearchReport:
    """Scan every ``k`` in the configured range.

    ``max_chunks`` stops the run after that many chunks, leaving the
    checkpoint as a killed process would; the returned report is marked
    ``interrupted``.
    """
    config.validate()
    t0 = time.perf_counter()
    sign = config.variant.sign
    report = SearchReport("iteration", config.echo())

    ckpt = None
    state: Dict[int, Tuple[int, List[CycleCertificate]]] = {}
    if config.checkpoint_path is not None:
        ckpt = CheckpointFile(config.checkpoint_path, config.config_hash())
        if resume:
            state = ckpt.load()
        elif ckpt.path.exists():
            ckpt.path.unlink()

    pool = ProcessPoolExecutor(config.worker_count) if config.worker_count > 1 else None
    done_chunks = 0
    try:
        for k in range(config.k_min, config.k_max + 1):
            limit = config.horizon(k)
            cursor, found = state.get(k, (1, []))
            found = list(found)
            total = -(-_odd_count(limit) // config.chunk_size)
            for (start, stop, _, _), minima in _ordered_map(
                    _chunks(cursor, limit, config.chunk_size, k, sign), config.worker_count, pool):
                new = [_certify(a, k, config.variant) for a in minima]
                found.extend(new)
                cursor = stop
                if ckpt is not None:
                    ckpt.append(k, cursor, new)
                done_chunks += 1
                if progress is not None:
                    progress(k, done_chunks, total)
                if max_chunks is not None and done_chunks >= max_chunks:
                    break
            scanned = min((cursor - 1) // 2, _odd_count(limit))
            res = KResult(k, limit, scanned, _dedup(found))
            finished = cursor > limit
            if config.variant is Variant.POS:
                res.complete = finished and limit >= bound_horizon(k)
            else:
                res.notes.append("finder only: no horizon bounds negative cycles")
            if not finished:
                res.notes.append(f"stopped before candidate {cursor}")
            report.results.append(res)
            if not finished:
                report.interrupted = True
                break
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    report.wall_time = time.perf_counter() - t0
    return report


def _dedup(certs: List[CycleCertificate]) -> List[CycleCertificate]:
    seen = set()
    out = []
    for c in certs:
        key = c.rotation_key()
        if key not in seen:
            seen.add(key)
            out.append(c)
    return out


def search_positive_cycles(k: int, loose_horizon: bool = False, workers: int = 1,
                           chunk_size: int = DEFAULT_CHUNK_SIZE) -> SearchReport:
    if k < 2:
        raise ValueError(f"positive search needs k >= 2, got {k}")
    return run(SearchConfig(Variant.POS, k, k, None, workers, chunk_size, loose_horizon=loose_horizon))


def search_negative_cycles(limit: int, max_period: int, workers: int = 1,
                           chunk_size: int = DEFAULT_CHUNK_SIZE) -> SearchReport:
    """Find negative cycles (as absolute values) whose minimum is at most ``limit``.

    Not a proof of anything: cycles with larger minima or longer periods are
    simply outside the scan.
    """
    if limit < 1 or max_period < 1:
        raise ValueError("limit and max_period must be >= 1")
    return run(SearchConfig(Variant.NEG, 1, max_period, limit, workers, chunk_size))


# -- exponent-sequence route ---------------------------------------------------

def compositions(total: int, k: int) -> Iterator[Tuple[int, ...]]:
    """All compositions of ``total`` into ``k`` positive parts, lexicographically."""
    if k < 1 or total < k:
        return
    if k == 1:
        yield (total,)
        return
    for first in range(1, total - k + 2):
        for rest in compositions(total - first, k - 1):
            yield (first,) + rest


def admissible_compositions(total: int, k: int) -> Iterator[Tuple[int, ...]]:
    """Compositions that pass :func:`check_admissible`, lexicographically.

    Built from the tail so the suffix constraints prune early, then sorted.
    """
    if k < 1 or total < k or 1 << total < 3**k + 1:
        return
    # need[i]: least sum of the last i parts with 2^sum > 3^i
    need = [0] + [(3**i).bit_length() for i in range(1, k)]
    out: List[Tuple[int, ...]] = []
    tail: List[int] = []

    def grow(i: int, suffix: int, budget: int) -> None:
        # tail holds the last i-1 parts, reversed; choose part k-i+1
        if i == k:
            out.append((budget,) + tuple(reversed(tail)))
            return
        for n in range(max(1, need[i] - suffix), budget - (k - i) + 1):
            tail.append(n)
            grow(i + 1, suffix + n, budget - n)
            tail.pop()

    grow(1, 0, total)
    out.sort()
    yield from out


def search_exponent_sequences(k: int, variant: Variant, n_min: int, n_max: int) -> SearchReport:
    """Solve the cycle equation for every valuation sequence with total in ``[n_min, n_max]``.

    Exhaustive for that range of totals only.
    """
    variant = Variant.parse(variant)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    t0 = time.perf_counter()
    report = SearchReport("exponent-sequences",
                          {"variant": variant.value, "k": k, "n_min": n_min, "n_max": n_max})
    res = KResult(k, None, 0)
    found: List[CycleCertificate] = []
    used = 0
    for total in range(n_min, n_max + 1):
        if variant is Variant.POS and not (1 << total) > 3**k:
            res.notes.append(f"N={total} skipped: 2^N < 3^k")
            continue
        if variant is Variant.NEG and not (total >= k and (1 << total) < 3**k):
            res.notes.append(f"N={total} skipped: need k <= N and 2^N < 3^k")
            continue
        used += 1
        seqs = admissible_compositions(total, k) if variant is Variant.POS else compositions(total, k)
        for seq in seqs:
            res.candidates += 1
            a = cycle_equation_solve(seq, variant).solution
            if a is None:
                continue
            actual, _ = exponent_sequence(a, k, variant)
            if actual != seq or minimal_period(a, k, variant) != k:
                continue
            found.append(_certify(a, k, variant))
    if not used:
        res.notes.append("empty effective range: no work done")
    res.notes.append(f"exhaustive only for exponent totals N in [{n_min}, {n_max}]")
    res.cycles = _dedup(found)
    report.results.append(res)
    report.wall_time = time.perf_counter() - t0
    return report
