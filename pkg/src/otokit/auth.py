"""Local user registration and login with password-derived store keys.

Credentials live in a permission-restricted JSON file beside the store.
The memory-hard scrypt KDF stretches the password once into a root secret;
the stored verifier and the 32-byte store encryption key are then derived
from that root with domain-separated HMACs, so the verifier on disk never
reveals the store key.

There is no password recovery: losing the password loses the data.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import os
from dataclasses import dataclass

from filelock import FileLock

from .errors import (
    AlreadyExistsError,
    AuthenticationFailure,
    NotFoundError,
    WeakPasswordError,
)

MIN_PASSWORD_LENGTH = 8
SALT_LEN = 16

# Published scrypt defaults for interactive logins.
DEFAULT_KDF_PARAMS = {"algorithm": "scrypt", "n": 2**14, "r": 8, "p": 1}

_VERIFIER_CONTEXT = b"otokit/verifier/v1"
_STORE_KEY_CONTEXT = b"otokit/store-key/v1"


@dataclass(frozen=True)
class CredentialRecord:
    username: str
    salt: bytes
    verifier: bytes
    kdf_params: dict

    def to_dict(self) -> dict:
        return {
            "username": self.username,
            "salt": base64.b64encode(self.salt).decode(),
            "verifier": base64.b64encode(self.verifier).decode(),
            "kdf_params": self.kdf_params,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CredentialRecord":
        return cls(
            username=d["username"],
            salt=base64.b64decode(d["salt"]),
            verifier=base64.b64decode(d["verifier"]),
            kdf_params=d["kdf_params"],
        )


def _derive_root(password: str, salt: bytes, kdf_params: dict) -> bytes:
    if kdf_params.get("algorithm") != "scrypt":
        raise AuthenticationFailure(
            f"unsupported KDF {kdf_params.get('algorithm')!r} in credentials file"
        )
    return hashlib.scrypt(
        password.encode("utf-8"),
        salt=salt,
        n=kdf_params["n"],
        r=kdf_params["r"],
        p=kdf_params["p"],
        dklen=32,
    )


def _verifier(root: bytes) -> bytes:
    return hmac.new(root, _VERIFIER_CONTEXT, hashlib.sha256).digest()


def _store_key(root: bytes) -> bytes:
    return hmac.new(root, _STORE_KEY_CONTEXT, hashlib.sha256).digest()


def _load_users(path: str) -> dict[str, CredentialRecord]:
    if not os.path.exists(path):
        return {}
    with open(path, encoding="utf-8") as fp:
        data = json.load(fp)
    return {u["username"]: CredentialRecord.from_dict(u) for u in data.get("users", [])}


def _save_users(path: str, users: dict[str, CredentialRecord]) -> None:
    data = {"users": [users[name].to_dict() for name in sorted(users)]}
    tmp = path + ".tmp"
    fd = os.open(tmp, os.O_WRONLY | os.O_CREAT | os.O_TRUNC, 0o600)
    with os.fdopen(fd, "w", encoding="utf-8") as fp:
        json.dump(data, fp, indent=2)
        fp.write("\n")
    os.replace(tmp, path)


def register(
    username: str,
    password: str,
    credentials_path: str,
    kdf_params: dict | None = None,
) -> tuple[CredentialRecord, bytes]:
    """Create a credential and return it with the derived store key."""
    if not username.strip():
        raise WeakPasswordError("username is empty")
    if len(password) < MIN_PASSWORD_LENGTH:
        raise WeakPasswordError(
            f"password must be at least {MIN_PASSWORD_LENGTH} characters"
        )
    params = dict(kdf_params or DEFAULT_KDF_PARAMS)
    lock = FileLock(credentials_path + ".lock")
    with lock:
        users = _load_users(credentials_path)
        if username in users:
            raise AlreadyExistsError(f"username {username!r} is already registered")
        salt = os.urandom(SALT_LEN)
        root = _derive_root(password, salt, params)
        record = CredentialRecord(
            username=username, salt=salt, verifier=_verifier(root), kdf_params=params
        )
        users[username] = record
        _save_users(credentials_path, users)
    return record, _store_key(root)


def login(username: str, password: str, credentials_path: str) -> bytes:
    """Verify the password and return the same store key register produced."""
    users = _load_users(credentials_path)
    record = users.get(username)
    if record is None:
        raise NotFoundError(f"unknown username {username!r}")
    root = _derive_root(password, record.salt, record.kdf_params)
    if not hmac.compare_digest(_verifier(root), record.verifier):
        raise AuthenticationFailure("wrong password")
    return _store_key(root)
