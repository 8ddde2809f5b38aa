"""Credential handling: registration, login, and key derivation."""

import json
import os
import stat

import pytest

from otokit import auth
from otokit.errors import (
    AlreadyExistsError,
    AuthenticationFailure,
    NotFoundError,
    WeakPasswordError,
)
from conftest import TEST_KDF


@pytest.fixture
def creds(tmp_path):
    return str(tmp_path / "credentials.json")


def test_register_returns_32_byte_key(creds):
    record, key = auth.register("alice", "correct horse", creds, kdf_params=TEST_KDF)
    assert record.username == "alice"
    assert isinstance(key, bytes) and len(key) == 32


def test_login_reproduces_registration_key(creds):
    _, key = auth.register("alice", "correct horse", creds, kdf_params=TEST_KDF)
    assert auth.login("alice", "correct horse", creds) == key


def test_login_wrong_password(creds):
    auth.register("alice", "correct horse", creds, kdf_params=TEST_KDF)
    with pytest.raises(AuthenticationFailure):
        auth.login("alice", "wrong horse!", creds)


def test_login_unknown_user(creds):
    auth.register("alice", "correct horse", creds, kdf_params=TEST_KDF)
    with pytest.raises(NotFoundError):
        auth.login("bob", "correct horse", creds)


def test_login_missing_file(creds):
    with pytest.raises(NotFoundError):
        auth.login("alice", "whatever!", creds)


def test_register_duplicate_username(creds):
    auth.register("alice", "correct horse", creds, kdf_params=TEST_KDF)
    with pytest.raises(AlreadyExistsError):
        auth.register("alice", "another pw!", creds, kdf_params=TEST_KDF)


@pytest.mark.parametrize("password", ["", "short", "1234567"])
def test_password_minimum_length(creds, password):
    with pytest.raises(WeakPasswordError):
        auth.register("alice", password, creds, kdf_params=TEST_KDF)
    assert not os.path.exists(creds)


def test_eight_chars_is_enough(creds):
    auth.register("alice", "12345678", creds, kdf_params=TEST_KDF)


def test_credentials_file_is_json_without_secrets(creds):
    auth.register("alice", "correct horse", creds, kdf_params=TEST_KDF)
    with open(creds) as fp:
        data = json.load(fp)
    assert [u["username"] for u in data["users"]] == ["alice"]
    blob = json.dumps(data)
    assert "correct horse" not in blob


def test_credentials_file_permissions(creds):
    auth.register("alice", "correct horse", creds, kdf_params=TEST_KDF)
    mode = stat.S_IMODE(os.stat(creds).st_mode)
    assert mode == 0o600


def test_store_key_differs_from_stored_verifier(creds):
    record, key = auth.register("alice", "correct horse", creds, kdf_params=TEST_KDF)
    assert key != record.verifier


def test_distinct_users_get_distinct_keys(creds):
    _, k1 = auth.register("alice", "same password", creds, kdf_params=TEST_KDF)
    _, k2 = auth.register("bob", "same password", creds, kdf_params=TEST_KDF)
    # Per-user random salt separates keys even for identical passwords.
    assert k1 != k2


def test_multiple_users_coexist(creds):
    _, k1 = auth.register("alice", "password one", creds, kdf_params=TEST_KDF)
    _, k2 = auth.register("bob", "password two", creds, kdf_params=TEST_KDF)
    assert auth.login("alice", "password one", creds) == k1
    assert auth.login("bob", "password two", creds) == k2


def test_default_kdf_params_recorded(creds):
    record, _ = auth.register("alice", "correct horse", creds, kdf_params=TEST_KDF)
    assert record.kdf_params["algorithm"] == "scrypt"
    assert auth.DEFAULT_KDF_PARAMS["n"] >= 2**14
