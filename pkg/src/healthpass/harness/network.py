"""Process-wide guard that turns any outbound socket connection into a failure."""

from __future__ import annotations

import socket
from contextlib import contextmanager
from typing import Iterator, List


class NetworkAttempt(RuntimeError):
    """Raised when code under a :func:`no_network` guard tries to connect."""


@contextmanager
def no_network() -> Iterator[List[str]]:
    """Block ``socket.connect`` / ``create_connection``; yields the list of attempts."""
    attempts: List[str] = []
    real_connect = socket.socket.connect
    real_connect_ex = socket.socket.connect_ex
    real_create = socket.create_connection

    def refuse(*args, **kwargs):
        attempts.append(repr(args[1:] if args and isinstance(args[0], socket.socket) else args))
        raise NetworkAttempt("network access attempted while offline")

    socket.socket.connect = refuse
    socket.socket.connect_ex = refuse
    socket.create_connection = refuse
    try:
        yield attempts
    finally:
        socket.socket.connect = real_connect
        socket.socket.connect_ex = real_connect_ex
        socket.create_connection = real_create
