"""Exceções do protocolo de implantação segura.

Cada erro tem um `codigo` estável que viaja no campo `detail` dos acks de falha.
"""

from __future__ import annotations


class ProtocolError(RuntimeError):
	codigo = "protocol_error"


class MalformedMessageError(ProtocolError):
	codigo = "malformed"


class UnknownSuiteError(MalformedMessageError):
	codigo = "unknown_suite"


class DecryptionFailureError(ProtocolError):
	codigo = "decryption_failure"


class SignatureInvalidError(ProtocolError):
	codigo = "signature_invalid"


class DigestMismatchError(ProtocolError):
	codigo = "digest_mismatch"


class ReplayedNonceError(ProtocolError):
	codigo = "replayed_nonce"


class UnknownSessionError(ProtocolError):
	codigo = "unknown_session"


class SessionExpiredError(ProtocolError):
	codigo = "session_expired"


class UnauthorizedError(ProtocolError):
	codigo = "unauthorized"


class ExecutionFailedError(ProtocolError):
	codigo = "execution_failed"


class RegistrationDeniedError(ProtocolError):
	codigo = "denied"


class FrameTooLargeError(MalformedMessageError):
	codigo = "frame_too_large"
