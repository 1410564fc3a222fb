"""Owner-only keystore file standing in for a hardware enclave.

Layout: ``0x01 | group id (1 byte) | secret scalar (fixed width)``.
"""

from __future__ import annotations

import os
import stat
from pathlib import Path
from typing import Optional

from healthpass.crypto.elgamal import KeyPair
from healthpass.crypto.group import GROUP_IDS, ExpCounter, GroupParams, group_by_id
from healthpass.errors import ConfigurationError, KeystoreError, ScalarRangeError

KEYSTORE_VERSION = 0x01


def write_keystore(path: "str | os.PathLike", keypair: KeyPair) -> None:
    """Persist the secret scalar; refuses to overwrite an existing keystore."""
    group = keypair.group
    blob = bytes((KEYSTORE_VERSION, GROUP_IDS[group.name])) + group.scalar_to_bytes(keypair.sk)
    try:
        fd = os.open(os.fspath(path), os.O_WRONLY | os.O_CREAT | os.O_EXCL, 0o600)
    except FileExistsError:
        raise KeystoreError(f"keystore {path} already exists; refusing to overwrite") from None
    except OSError as exc:
        raise KeystoreError(f"cannot create keystore {path}: {exc.strerror}") from None
    with os.fdopen(fd, "wb") as fh:
        fh.write(blob)


def read_keystore(path: "str | os.PathLike", *, allow_test_group: bool = False,
                  counter: Optional[ExpCounter] = None) -> KeyPair:
    p = Path(path)
    try:
        mode = p.stat().st_mode
        blob = p.read_bytes()
    except OSError as exc:
        raise KeystoreError(f"cannot read keystore {path}: {exc.strerror}") from None
    if stat.S_IMODE(mode) & 0o077:
        raise KeystoreError(f"keystore {path} is accessible by other users")
    if len(blob) < 3 or blob[0] != KEYSTORE_VERSION:
        raise KeystoreError("unrecognised keystore format")
    try:
        group: GroupParams = group_by_id(blob[1], allow_test=allow_test_group)
        return KeyPair.from_secret(group.scalar_from_bytes(blob[2:]), group, counter)
    except (ConfigurationError, ScalarRangeError) as exc:
        raise KeystoreError(f"corrupt keystore: {exc}") from None
