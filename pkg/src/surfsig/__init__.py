"""Code-based hash-and-sign over permuted (U, U+V) codes, with decoders,
structural attacks and security estimators."""

from .surf import (
    PublicKey,
    SecretKey,
    Signature,
    SurfParams,
    hash_to_syndrome,
    keygen,
    select_params,
    sign,
    verify,
)

__all__ = [
    "PublicKey",
    "SecretKey",
    "Signature",
    "SurfParams",
    "hash_to_syndrome",
    "keygen",
    "select_params",
    "sign",
    "verify",
]
__version__ = "0.1.0"
