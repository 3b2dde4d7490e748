"""Canal seguro entre empresa e provedor: registro, resposta, estratégia e ack."""

from .cliente import EnterpriseClient, build_registration_request, send_strategy, verificar_ack, verify_reply
from .cripto import MD5_COMPAT, MODERN, SUITES, KeyMaterial, Suite, suite_por_nome
from .erros import (
	DecryptionFailureError,
	DigestMismatchError,
	ExecutionFailedError,
	MalformedMessageError,
	ProtocolError,
	RegistrationDeniedError,
	ReplayedNonceError,
	SessionExpiredError,
	SignatureInvalidError,
	UnauthorizedError,
	UnknownSessionError,
	UnknownSuiteError,
)
from .servidor import ProviderServer, ServidorTCP, iniciar_em_thread, process_registration, process_strategy

__all__ = [
	"DecryptionFailureError",
	"DigestMismatchError",
	"EnterpriseClient",
	"ExecutionFailedError",
	"KeyMaterial",
	"MD5_COMPAT",
	"MODERN",
	"MalformedMessageError",
	"ProtocolError",
	"ProviderServer",
	"RegistrationDeniedError",
	"ReplayedNonceError",
	"SUITES",
	"ServidorTCP",
	"SessionExpiredError",
	"SignatureInvalidError",
	"Suite",
	"UnauthorizedError",
	"UnknownSessionError",
	"UnknownSuiteError",
	"build_registration_request",
	"iniciar_em_thread",
	"process_registration",
	"process_strategy",
	"send_strategy",
	"suite_por_nome",
	"verificar_ack",
	"verify_reply",
]
