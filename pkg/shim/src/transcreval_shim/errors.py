"""Request-level failures, each carrying its HTTP status."""

from __future__ import annotations


class ShimError(Exception):
    status = 500


class BadInput(ShimError):
    """Undecodable image, empty text, or an otherwise malformed request."""

    status = 400


class PayloadTooLarge(ShimError):
    """An image exceeds the configured size cap."""

    status = 413


class ModelUnavailable(ShimError):
    """The requested model is not hosted by this shim instance."""

    status = 503
