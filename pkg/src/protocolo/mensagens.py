"""As mensagens do canal: registro, resposta, mensagem seguinte (estratégia) e ack.

Mensagens assinadas terminam com o bloco nonce ∥ digest ∥ assinatura, onde
digest = H(campos anteriores com prefixo de comprimento) e assinatura = Sign(nonce ∥ digest).
"""

from __future__ import annotations

import hmac
from dataclasses import dataclass
from typing import ClassVar, Self

from cryptography.hazmat.primitives.asymmetric import rsa

from src.database import EP_CODE_MAX_BYTES, EP_CODE_MIN_BYTES, ep_code_valido

from .cripto import (
	TAMANHO_IV,
	TAMANHO_KEY_ID,
	TAMANHO_NONCE,
	Suite,
	assinar,
	cifrar_aes,
	cifrar_rsa,
	decifrar_aes,
	decifrar_rsa,
	nova_chave_simetrica,
	novo_nonce,
	suite_por_codigo,
	verificar_assinatura,
)
from .erros import DigestMismatchError, MalformedMessageError, ReplayedNonceError
from .wire import MAX_FRAME_PADRAO, MessageType, codificar_frame, decodificar_frame, desempacotar_campos, empacotar_campos

ACK_REGISTERED = b"REGISTERED"
ACK_DENIED = b"DENIED"
STATUS_SUCCESS = b"SUCCESS"
STATUS_FAILURE = b"FAILURE"


@dataclass(frozen=True, slots=True)
class BlocoAssinatura:
	nonce: bytes
	digest: bytes
	signature: bytes

	def campos(self) -> list[bytes]:
		return [self.nonce, self.digest, self.signature]


def assinar_campos(privada: rsa.RSAPrivateKey, suite: Suite, campos: list[bytes]) -> BlocoAssinatura:
	nonce = novo_nonce()
	digest = suite.digest(empacotar_campos(campos))
	return BlocoAssinatura(nonce, digest, assinar(privada, nonce + digest))


def verificar_campos(
	publica: rsa.RSAPublicKey,
	suite: Suite,
	campos: list[bytes],
	bloco: BlocoAssinatura,
	vistos: set[bytes] | None = None,
) -> None:
	"""Assinatura, depois digest, depois frescor do nonce. Não registra o nonce."""
	verificar_assinatura(publica, bloco.signature, bloco.nonce + bloco.digest)
	if not hmac.compare_digest(bloco.digest, suite.digest(empacotar_campos(campos))):
		raise DigestMismatchError("digest não confere com os campos recebidos")
	if vistos is not None and bloco.nonce in vistos:
		raise ReplayedNonceError(f"nonce já utilizado: {bloco.nonce.hex()}")


def _ler(dados: bytes, tipo: MessageType, quantidade: int, max_bytes: int) -> tuple[Suite, list[bytes]]:
	frame = decodificar_frame(dados, max_bytes)
	if frame.tipo != tipo:
		raise MalformedMessageError(f"tipo 0x{frame.tipo:02x} inesperado (esperado 0x{tipo:02x})")
	suite = suite_por_codigo(frame.suite)
	return suite, desempacotar_campos(frame.payload, quantidade)


def _bloco(campos: list[bytes], suite: Suite) -> BlocoAssinatura:
	nonce, digest, assinatura = campos
	if len(nonce) != TAMANHO_NONCE:
		raise MalformedMessageError(f"nonce com {len(nonce)} bytes")
	if len(digest) != suite.tamanho_digest:
		raise MalformedMessageError(f"digest com {len(digest)} bytes para a suíte {suite.nome}")
	return BlocoAssinatura(nonce, digest, assinatura)


def _aad_registro(suite: Suite) -> bytes:
	return b"harmmtd-reg" + bytes((suite.codigo,))


@dataclass(frozen=True, slots=True)
class RegistrationRequest:
	"""Registro cifrado em modo híbrido: chave AES temporária sob RSA-OAEP + (ep_code ∥ chave pública) sob AES-GCM."""

	TIPO: ClassVar[MessageType] = MessageType.REGISTRATION

	wrapped_key: bytes
	iv: bytes
	sealed: bytes

	@classmethod
	def selar(cls, ep_code: str, publica_der: bytes, provedor: rsa.RSAPublicKey, suite: Suite) -> Self:
		codigo = ep_code.encode("utf-8")
		if not ep_code_valido(ep_code):
			raise ValueError(f"EP-code precisa ter entre {EP_CODE_MIN_BYTES} e {EP_CODE_MAX_BYTES} bytes UTF-8")
		temporaria = nova_chave_simetrica()
		iv, selado = cifrar_aes(temporaria, empacotar_campos([codigo, publica_der]), _aad_registro(suite))
		return cls(cifrar_rsa(provedor, temporaria), iv, selado)

	def abrir(self, privada: rsa.RSAPrivateKey, suite: Suite) -> tuple[bytes, bytes]:
		"""Devolve (ep_code em bytes, chave pública DER)."""
		temporaria = decifrar_rsa(privada, self.wrapped_key)
		if len(self.iv) != TAMANHO_IV:
			raise MalformedMessageError(f"IV com {len(self.iv)} bytes")
		claro = decifrar_aes(temporaria, self.iv, self.sealed, _aad_registro(suite))
		codigo, publica_der = desempacotar_campos(claro, 2)
		return codigo, publica_der

	def para_frame(self, suite: Suite) -> bytes:
		return codificar_frame(self.TIPO, suite.codigo, empacotar_campos([self.wrapped_key, self.iv, self.sealed]))

	@classmethod
	def de_frame(cls, dados: bytes, max_bytes: int = MAX_FRAME_PADRAO) -> tuple[Self, Suite]:
		suite, campos = _ler(dados, cls.TIPO, 3, max_bytes)
		return cls(*campos), suite


@dataclass(frozen=True, slots=True)
class ReplyMessage:
	TIPO: ClassVar[MessageType] = MessageType.REPLY

	enc_shared_key: bytes
	ack: bytes
	bloco: BlocoAssinatura

	@property
	def campos_cobertos(self) -> list[bytes]:
		return [self.enc_shared_key, self.ack]

	@property
	def registrado(self) -> bool:
		return self.ack == ACK_REGISTERED

	@classmethod
	def criar(cls, privada: rsa.RSAPrivateKey, suite: Suite, enc_shared_key: bytes, ack: bytes) -> Self:
		return cls(enc_shared_key, ack, assinar_campos(privada, suite, [enc_shared_key, ack]))

	def verificar(self, publica: rsa.RSAPublicKey, suite: Suite, vistos: set[bytes] | None = None) -> None:
		verificar_campos(publica, suite, self.campos_cobertos, self.bloco, vistos)

	def para_frame(self, suite: Suite) -> bytes:
		return codificar_frame(self.TIPO, suite.codigo, empacotar_campos(self.campos_cobertos + self.bloco.campos()))

	@classmethod
	def de_frame(cls, dados: bytes, max_bytes: int = MAX_FRAME_PADRAO) -> tuple[Self, Suite]:
		suite, campos = _ler(dados, cls.TIPO, 5, max_bytes)
		if campos[1] not in (ACK_REGISTERED, ACK_DENIED):
			raise MalformedMessageError(f"ack desconhecido: {campos[1]!r}")
		return cls(campos[0], campos[1], _bloco(campos[2:], suite)), suite


@dataclass(frozen=True, slots=True)
class FurtherMessage:
	"""Estratégia cifrada com a chave compartilhada; `key_id` em claro seleciona a sessão."""

	TIPO: ClassVar[MessageType] = MessageType.FURTHER

	key_id: bytes
	enc_payload: bytes
	bloco: BlocoAssinatura

	@property
	def campos_cobertos(self) -> list[bytes]:
		return [self.key_id, self.enc_payload]

	@classmethod
	def criar(cls, privada: rsa.RSAPrivateKey, suite: Suite, key_id: bytes, shared_key: bytes, conteudo: bytes) -> Self:
		iv, cifrado = cifrar_aes(shared_key, conteudo)
		enc_payload = iv + cifrado
		return cls(key_id, enc_payload, assinar_campos(privada, suite, [key_id, enc_payload]))

	def verificar(self, publica: rsa.RSAPublicKey, suite: Suite, vistos: set[bytes] | None = None) -> None:
		verificar_campos(publica, suite, self.campos_cobertos, self.bloco, vistos)

	def decifrar(self, shared_key: bytes) -> bytes:
		return decifrar_aes(shared_key, self.enc_payload[:TAMANHO_IV], self.enc_payload[TAMANHO_IV:])

	def para_frame(self, suite: Suite) -> bytes:
		return codificar_frame(self.TIPO, suite.codigo, empacotar_campos(self.campos_cobertos + self.bloco.campos()))

	@classmethod
	def de_frame(cls, dados: bytes, max_bytes: int = MAX_FRAME_PADRAO) -> tuple[Self, Suite]:
		suite, campos = _ler(dados, cls.TIPO, 5, max_bytes)
		if len(campos[0]) != TAMANHO_KEY_ID:
			raise MalformedMessageError(f"key_id com {len(campos[0])} bytes")
		if len(campos[1]) <= TAMANHO_IV:
			raise MalformedMessageError("payload cifrado curto demais")
		return cls(campos[0], campos[1], _bloco(campos[2:], suite)), suite


@dataclass(frozen=True, slots=True)
class AckMessage:
	TIPO: ClassVar[MessageType] = MessageType.ACK

	ref_nonce: bytes
	status: bytes
	detail: bytes
	bloco: BlocoAssinatura

	@property
	def campos_cobertos(self) -> list[bytes]:
		return [self.ref_nonce, self.status, self.detail]

	@property
	def sucesso(self) -> bool:
		return self.status == STATUS_SUCCESS

	@property
	def detalhe(self) -> str:
		return self.detail.decode("utf-8", errors="replace")

	@classmethod
	def criar(cls, privada: rsa.RSAPrivateKey, suite: Suite, ref_nonce: bytes, sucesso: bool, detalhe: str) -> Self:
		status = STATUS_SUCCESS if sucesso else STATUS_FAILURE
		detail = detalhe.encode("utf-8")
		return cls(ref_nonce, status, detail, assinar_campos(privada, suite, [ref_nonce, status, detail]))

	def verificar(self, publica: rsa.RSAPublicKey, suite: Suite, vistos: set[bytes] | None = None) -> None:
		verificar_campos(publica, suite, self.campos_cobertos, self.bloco, vistos)

	def para_frame(self, suite: Suite) -> bytes:
		return codificar_frame(self.TIPO, suite.codigo, empacotar_campos(self.campos_cobertos + self.bloco.campos()))

	@classmethod
	def de_frame(cls, dados: bytes, max_bytes: int = MAX_FRAME_PADRAO) -> tuple[Self, Suite]:
		suite, campos = _ler(dados, cls.TIPO, 6, max_bytes)
		if campos[1] not in (STATUS_SUCCESS, STATUS_FAILURE):
			raise MalformedMessageError(f"status desconhecido: {campos[1]!r}")
		return cls(campos[0], campos[1], campos[2], _bloco(campos[3:], suite)), suite
