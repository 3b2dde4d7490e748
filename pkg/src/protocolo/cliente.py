"""Lado da empresa: registro com EP-code, verificação da resposta e envio da estratégia."""

from __future__ import annotations

import socket
from typing import Self

from cryptography.hazmat.primitives.asymmetric import rsa

from src.estrategia import Strategy
from src.logger import setup_logging

from .cripto import MODERN, TAMANHO_CHAVE, KeyMaterial, Suite, decifrar_rsa, publica_para_der
from .erros import DecryptionFailureError, MalformedMessageError, ProtocolError, RegistrationDeniedError
from .mensagens import AckMessage, FurtherMessage, RegistrationRequest, ReplyMessage
from .wire import MAX_FRAME_PADRAO, enviar_frame, ler_frame

logger = setup_logging("protocolo.cliente")

_CODIGOS_REREGISTRO = ("unknown_session", "session_expired")


def build_registration_request(km: KeyMaterial, provider_pub: rsa.RSAPublicKey, suite: Suite = MODERN) -> RegistrationRequest:
	if not km.ep_code:
		raise ValueError("EP-code vazio")
	return RegistrationRequest.selar(km.ep_code, publica_para_der(km.public_key), provider_pub, suite)


def verify_reply(km: KeyMaterial, dados: bytes, provider_pub: rsa.RSAPublicKey) -> bytes:
	"""Verifica a resposta do provedor e instala a chave compartilhada em `km`.

	Ordem: assinatura, digest, nonce. Resposta DENIED autêntica levanta `RegistrationDeniedError`.
	"""
	reply, suite = ReplyMessage.de_frame(dados)
	reply.verificar(provider_pub, suite, km.nonces_vistos)
	km.nonces_vistos.add(reply.bloco.nonce)
	if not reply.registrado:
		raise RegistrationDeniedError("registro negado pelo provedor (DENIED)")
	chave = decifrar_rsa(km.private_key, reply.enc_shared_key)
	if len(chave) != TAMANHO_CHAVE:
		raise DecryptionFailureError(f"chave compartilhada com {len(chave)} bytes")
	km.shared_key = chave
	return chave


def send_strategy(km: KeyMaterial, strategy: Strategy, suite: Suite = MODERN) -> FurtherMessage:
	"""Monta a mensagem seguinte com a estratégia cifrada sob a chave compartilhada."""
	if km.shared_key is None or km.key_id is None:
		raise ProtocolError("nenhuma chave compartilhada: registre-se antes de enviar estratégias")
	return FurtherMessage.criar(km.private_key, suite, km.key_id, km.shared_key, strategy.to_bytes())


def verificar_ack(km: KeyMaterial, dados: bytes, provider_pub: rsa.RSAPublicKey, ref_nonce: bytes | None = None) -> AckMessage:
	ack, suite = AckMessage.de_frame(dados)
	ack.verificar(provider_pub, suite, km.nonces_vistos)
	km.nonces_vistos.add(ack.bloco.nonce)
	if ref_nonce is not None and ack.ref_nonce != ref_nonce:
		raise MalformedMessageError("ack não corresponde à mensagem enviada")
	return ack


def codigo_do_ack(ack: AckMessage) -> str:
	return ack.detalhe.split(":", 1)[0].strip()


class EnterpriseClient:
	"""Conexão da empresa com o provedor. Guarda os frames enviados em `transcricao`."""

	def __init__(
		self,
		km: KeyMaterial,
		provider_pub: rsa.RSAPublicKey,
		endpoint: tuple[str, int],
		*,
		suite: Suite = MODERN,
		socket_timeout: float = 10.0,
		max_frame_bytes: int = MAX_FRAME_PADRAO,
	):
		self.km = km
		self.provider_pub = provider_pub
		self.endpoint = endpoint
		self.suite = suite
		self.socket_timeout = socket_timeout
		self.max_frame_bytes = max_frame_bytes
		self.transcricao: list[bytes] = []
		self._sock: socket.socket | None = None

	def __enter__(self) -> Self:
		return self

	def __exit__(self, *exc) -> None:
		self.close()

	def _conectar(self) -> socket.socket:
		if self._sock is None:
			self._sock = socket.create_connection(self.endpoint, timeout=self.socket_timeout)
		return self._sock

	def close(self) -> None:
		if self._sock is not None:
			try:
				self._sock.close()
			finally:
				self._sock = None

	def _trocar(self, frame: bytes) -> bytes:
		sock = self._conectar()
		self.transcricao.append(frame)
		try:
			enviar_frame(sock, frame)
			resposta = ler_frame(sock, self.max_frame_bytes)
		except OSError:
			self.close()
			raise
		if resposta is None:
			self.close()
			raise ConnectionError("o provedor encerrou a conexão sem responder")
		return resposta

	def registrar(self) -> bytes:
		req = build_registration_request(self.km, self.provider_pub, self.suite)
		chave = verify_reply(self.km, self._trocar(req.para_frame(self.suite)), self.provider_pub)
		logger.info(f"Registro aceito; key_id {self.km.key_id.hex()[:8]}")  # type: ignore[union-attr]
		return chave

	def _enviar_uma(self, strategy: Strategy) -> AckMessage:
		msg = send_strategy(self.km, strategy, self.suite)
		resposta = self._trocar(msg.para_frame(self.suite))
		return verificar_ack(self.km, resposta, self.provider_pub, msg.bloco.nonce)

	def enviar_estrategia(self, strategy: Strategy) -> AckMessage:
		"""Registra se preciso, envia a estratégia e devolve o ack verificado.

		Se a sessão em cache for rejeitada (desconhecida ou expirada), registra de novo uma única vez.
		"""
		if self.km.shared_key is None:
			self.registrar()
		ack = self._enviar_uma(strategy)
		if not ack.sucesso and codigo_do_ack(ack) in _CODIGOS_REREGISTRO:
			logger.info(f"Sessão rejeitada ({codigo_do_ack(ack)}); registrando novamente")
			self.registrar()
			ack = self._enviar_uma(strategy)
		nivel = "SUCCESS" if ack.sucesso else "FAILURE"
		logger.info(f"Ack do provedor: {nivel} ({ack.detalhe})")
		return ack

	def reenviar(self, frame: bytes) -> AckMessage:
		"""Reenvia um frame gravado, byte a byte, e verifica o ack recebido."""
		return verificar_ack(self.km, self._trocar(frame), self.provider_pub)
