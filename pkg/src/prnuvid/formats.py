"""Shared helpers for the binary artifact formats.

All formats end with an 8-byte BLAKE2b checksum of the payload (everything
between the magic and the checksum). BLAKE2b-64 is pinned here because it is
in the standard library and stable across platforms.
"""

import hashlib
import os
import tempfile

from .errors import ChecksumError, TruncatedFileError

CHECKSUM_LEN = 8


def payload_checksum(payload: bytes) -> bytes:
    return hashlib.blake2b(payload, digest_size=CHECKSUM_LEN).digest()


def read_exact(fh, n, what):
    """Read exactly n bytes or raise a structured truncation error."""
    data = fh.read(n)
    if len(data) != n:
        start = fh.tell() - len(data)
        raise TruncatedFileError(
            f"truncated while reading {what}: needed bytes "
            f"[{start}, {start + n}), got {len(data)}"
        )
    return data


def verify_checksum(payload: bytes, stored: bytes, what):
    if payload_checksum(payload) != stored:
        raise ChecksumError(f"checksum mismatch in {what}")


def atomic_write(path, data: bytes):
    """Write to a temp file in the target directory, then rename into place."""
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".prnuvid-tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
