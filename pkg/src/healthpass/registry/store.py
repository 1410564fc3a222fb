"""Write-once, append-only record log with an in-memory index.

Each entry is a 4-byte big-endian length followed by a StoredRecord frame,
which carries its own CRC32.  The index (sess_id -> file offset) is rebuilt
by scanning the log at open time; reads are positional point lookups.
"""

from __future__ import annotations

import os
import threading
from pathlib import Path
from typing import Dict, Iterator, Optional, Tuple

from healthpass import wire
from healthpass.crypto.group import GroupParams
from healthpass.errors import ConflictError, CorruptRecordError, DecodeError, NotFoundError
from healthpass.model import SESS_ID_SIZE, StoredRecord

_LEN = 4
# offset of the sess_id inside a StoredRecord frame: header + first length prefix
_SESS_OFFSET = wire.HEADER_SIZE + wire.PREFIX_SIZE


class RecordStore:
    def __init__(self, path: "str | os.PathLike", group: GroupParams) -> None:
        self.path = Path(path)
        self.group = group
        self._write_lock = threading.Lock()
        self._index: Dict[bytes, Tuple[int, int]] = {}
        self.path.touch(mode=0o600, exist_ok=True)
        self._fd = os.open(self.path, os.O_RDWR | os.O_APPEND)
        self._end = self._scan()

    def _scan(self) -> int:
        data = self.path.read_bytes()
        pos = 0
        while pos < len(data):
            if pos + _LEN > len(data):
                raise CorruptRecordError(f"truncated entry header at offset {pos}")
            n = int.from_bytes(data[pos:pos + _LEN], "big")
            start = pos + _LEN
            if start + n > len(data) or n < _SESS_OFFSET + SESS_ID_SIZE:
                raise CorruptRecordError(f"truncated entry at offset {pos}")
            sess_id = data[start + _SESS_OFFSET:start + _SESS_OFFSET + SESS_ID_SIZE]
            if sess_id in self._index:
                raise CorruptRecordError("duplicate session id in log")
            self._index[sess_id] = (start, n)
            pos = start + n
        return pos

    def __len__(self) -> int:
        return len(self._index)

    def __contains__(self, sess_id: bytes) -> bool:
        return sess_id in self._index

    def put(self, record: StoredRecord) -> None:
        frame = wire.encode(record, self.group)
        with self._write_lock:
            if record.sess_id in self._index:
                raise ConflictError("a record already exists for this session id")
            os.write(self._fd, len(frame).to_bytes(_LEN, "big") + frame)
            os.fsync(self._fd)
            self._index[record.sess_id] = (self._end + _LEN, len(frame))
            self._end += _LEN + len(frame)

    def get(self, sess_id: bytes) -> StoredRecord:
        loc = self._index.get(sess_id)
        if loc is None:
            raise NotFoundError("not found")
        offset, n = loc
        raw = os.pread(self._fd, n, offset)
        try:
            record = wire.decode(raw, StoredRecord, self.group)
        except DecodeError as exc:
            raise CorruptRecordError(f"unreadable record: {exc}") from None
        if record.sess_id != sess_id:
            raise CorruptRecordError("index points at the wrong record")
        return record

    def get_raw(self, sess_id: bytes) -> Optional[bytes]:
        loc = self._index.get(sess_id)
        return None if loc is None else os.pread(self._fd, loc[1], loc[0])

    def __iter__(self) -> Iterator[StoredRecord]:
        for sess_id in list(self._index):
            yield self.get(sess_id)

    def purge(self, older_than: int) -> int:
        """Rewrite the log without records stored before ``older_than``; returns how many went."""
        with self._write_lock:
            keep = [r for r in self if r.stored_at >= older_than]
            removed = len(self._index) - len(keep)
            tmp = self.path.with_name(self.path.name + ".purge")
            with open(os.open(tmp, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600), "wb") as fh:
                for r in keep:
                    frame = wire.encode(r, self.group)
                    fh.write(len(frame).to_bytes(_LEN, "big") + frame)
                fh.flush()
                os.fsync(fh.fileno())
            os.replace(tmp, self.path)
            os.close(self._fd)
            self._fd = os.open(self.path, os.O_RDWR | os.O_APPEND)
            self._index = {}
            self._end = self._scan()
            return removed

    def close(self) -> None:
        if self._fd >= 0:
            os.close(self._fd)
            self._fd = -1

    def __enter__(self) -> "RecordStore":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
