"""Exception hierarchy shared by every layer of the package."""


class HealthPassError(Exception):
    """Base class for all errors raised by healthpass."""


class ConfigurationError(HealthPassError):
    """Invalid parameters, policy or runtime configuration."""


class MembershipError(HealthPassError, ValueError):
    """A value is not an element of the working prime-order subgroup."""


class ScalarRangeError(HealthPassError, ValueError):
    """A scalar lies outside the range allowed at that boundary."""


# -- codec -----------------------------------------------------------------

class DecodeError(HealthPassError, ValueError):
    """Base class for every rejection produced by the wire codec."""


class MalformedError(DecodeError):
    """Truncated, over-long or structurally invalid input."""


class WrongTypeError(DecodeError):
    """A well-formed frame of a different message type."""


class NonCanonicalError(DecodeError):
    """Input that would decode, but is not the unique canonical encoding."""


class MembershipDecodeError(DecodeError, MembershipError):
    """A decoded group element failed the subgroup membership test."""


class BudgetExceededError(DecodeError, ConfigurationError):
    """A presentation is larger than one QR symbol can carry."""


# -- protocol --------------------------------------------------------------

class OpaqueError(HealthPassError):
    """The encrypted result could not be opened (wrong ot_id or tampering).

    Deliberately carries no detail about why.
    """

    def __init__(self, message: str = "opaque/unauthorized") -> None:
        super().__init__(message)


class IssuerAuthError(HealthPassError):
    """The result opened but its issuer signature does not verify."""


class HolderKeyMismatchError(HealthPassError):
    """A record is bound to a different holder public key."""


class DuplicateRegistrationError(HealthPassError):
    """A one-time identifier was registered twice at the same site."""


class KeystoreError(HealthPassError):
    """Keystore missing, unreadable, corrupt or already populated."""


# -- registry --------------------------------------------------------------

class UnauthorizedError(HealthPassError):
    """Upload attempted with a missing or unknown site credential."""


class ConflictError(HealthPassError):
    """Write-once violation: the session id already has a record."""


class NotFoundError(HealthPassError):
    """No record is hosted under the requested session id."""


class CorruptRecordError(DecodeError):
    """A persisted record failed its checksum."""


class TransportError(HealthPassError):
    """The network transport failed or is disabled."""
