"""Servidor do provedor de nuvem: autentica empresas, mantém sessões e executa estratégias.

Cada conexão TCP é atendida em uma thread própria. Verificação e decifragem são locais
à sessão; as transições do `CloudState` autoritativo passam por um único ponto de commit.
"""

from __future__ import annotations

import json
import socket
import socketserver
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from cryptography.hazmat.primitives.asymmetric import rsa

from src.database import ep_code_valido, obter_tenant_por_ep_code, registrar_acao, registrar_sessao
from src.estrategia import InvalidStrategyError, Strategy, apply_strategy
from src.logger import setup_logging
from src.nuvem import CloudError, CloudState

from .cripto import cifrar_rsa, derivar_key_id, nova_chave_simetrica, publica_de_der
from .erros import (
	ExecutionFailedError,
	MalformedMessageError,
	ProtocolError,
	ReplayedNonceError,
	SessionExpiredError,
	UnauthorizedError,
	UnknownSessionError,
)
from .mensagens import ACK_DENIED, ACK_REGISTERED, AckMessage, FurtherMessage, RegistrationRequest, ReplyMessage
from .wire import MAX_FRAME_PADRAO, MessageType, enviar_frame, ler_frame

logger = setup_logging("protocolo.servidor")

ARQUIVO_ESTADO = "estado_provedor.json"


@dataclass(slots=True)
class SessaoAtiva:
	key_id: bytes
	tenant: str
	enterprise_pub: rsa.RSAPublicKey
	shared_key: bytes
	contador: int
	ultimo_uso: float
	nonces: set[bytes] = field(default_factory=set)


class ProviderServer:
	"""Estado do provedor: chaves, sessões e o estado autoritativo da nuvem."""

	def __init__(
		self,
		private_key: rsa.RSAPrivateKey,
		cloud: CloudState,
		*,
		db_path: Path | str | None = None,
		session_timeout: float = 300.0,
		max_frame_bytes: int = MAX_FRAME_PADRAO,
		out_dir: Path | None = None,
		relogio: Callable[[], float] = time.monotonic,
	):
		self.private_key = private_key
		self.db_path = db_path
		self.session_timeout = session_timeout
		self.max_frame_bytes = max_frame_bytes
		self.out_dir = out_dir
		self._relogio = relogio
		self._estado = cloud
		self._sessoes: dict[bytes, SessaoAtiva] = {}
		self._por_tenant: dict[str, bytes] = {}
		self._lock_sessoes = threading.Lock()
		self._lock_commit = threading.Lock()
		self._gravar_estado()

	@property
	def public_key(self) -> rsa.RSAPublicKey:
		return self.private_key.public_key()

	@property
	def estado(self) -> CloudState:
		return self._estado

	def sessao(self, key_id: bytes) -> SessaoAtiva | None:
		with self._lock_sessoes:
			return self._sessoes.get(key_id)

	def _gravar_estado(self) -> None:
		if self.out_dir is None:
			return
		self.out_dir.mkdir(parents=True, exist_ok=True)
		caminho = self.out_dir / ARQUIVO_ESTADO
		caminho.write_text(
			json.dumps(self._estado.para_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
			encoding="utf-8",
		)

	def process_registration(self, dados: bytes) -> bytes:
		"""Autentica o EP-code e devolve a resposta assinada (REGISTERED ou DENIED).

		Ciphertext ilegível levanta `ProtocolError`; o chamador encerra a conexão.
		"""
		req, suite = RegistrationRequest.de_frame(dados, self.max_frame_bytes)
		codigo, publica_der = req.abrir(self.private_key, suite)
		publica = publica_de_der(publica_der)

		try:
			ep_code = codigo.decode("utf-8")
		except UnicodeDecodeError:
			ep_code = ""
		tenant = obter_tenant_por_ep_code(ep_code, db_path=self.db_path) if ep_code_valido(ep_code) else None
		if tenant is None:
			logger.warning("Registro negado: EP-code não inscrito")
			return ReplyMessage.criar(self.private_key, suite, b"", ACK_DENIED).para_frame(suite)

		shared_key = nova_chave_simetrica()
		key_id = derivar_key_id(shared_key)
		contador = registrar_sessao(key_id.hex(), tenant, db_path=self.db_path)
		with self._lock_sessoes:
			anterior = self._por_tenant.pop(tenant, None)
			if anterior is not None:
				self._sessoes.pop(anterior, None)
			self._sessoes[key_id] = SessaoAtiva(
				key_id=key_id,
				tenant=tenant,
				enterprise_pub=publica,
				shared_key=shared_key,
				contador=contador,
				ultimo_uso=self._relogio(),
			)
			self._por_tenant[tenant] = key_id
		logger.info(f"Locatário {tenant} registrado (sessão {contador}, key_id {key_id.hex()[:8]})")
		reply = ReplyMessage.criar(self.private_key, suite, cifrar_rsa(publica, shared_key), ACK_REGISTERED)
		return reply.para_frame(suite)

	def _sessao_valida(self, key_id: bytes) -> SessaoAtiva:
		with self._lock_sessoes:
			sessao = self._sessoes.get(key_id)
			if sessao is None:
				raise UnknownSessionError(f"sessão desconhecida: {key_id.hex()}")
			if self._relogio() - sessao.ultimo_uso > self.session_timeout:
				del self._sessoes[key_id]
				self._por_tenant.pop(sessao.tenant, None)
				raise SessionExpiredError(f"sessão de {sessao.tenant} expirada")
			return sessao

	def _verificar(self, msg: FurtherMessage, suite) -> tuple[SessaoAtiva, Strategy]:
		sessao = self._sessao_valida(msg.key_id)
		msg.verificar(sessao.enterprise_pub, suite, sessao.nonces)
		conteudo = msg.decifrar(sessao.shared_key)
		try:
			strategy = Strategy.from_bytes(conteudo)
		except InvalidStrategyError as exc:
			raise MalformedMessageError(str(exc)) from exc
		with self._lock_sessoes:
			if msg.bloco.nonce in sessao.nonces:
				raise ReplayedNonceError(f"nonce já utilizado: {msg.bloco.nonce.hex()}")
			sessao.nonces.add(msg.bloco.nonce)
			sessao.ultimo_uso = self._relogio()
		return sessao, strategy

	def _executar(self, tenant: str, strategy: Strategy) -> None:
		with self._lock_commit:
			estado = self._estado
			vm = estado.vms.get(strategy.vm_id)
			if vm is None or vm.tenant != tenant:
				raise UnauthorizedError(f"{tenant} não pode agir sobre {strategy.vm_id}")
			try:
				novo = apply_strategy(estado, strategy)
			except CloudError as exc:
				raise ExecutionFailedError(f"{type(exc).__name__}: {exc}") from exc
			self._estado = novo
			self._gravar_estado()

	def process_strategy(self, dados: bytes) -> bytes:
		"""Verifica, decifra, autoriza e executa a estratégia; responde com ack assinado.

		Frame ilegível levanta `ProtocolError`. Falhas de verificação viram ack FAILURE
		e deixam o estado da nuvem intacto.
		"""
		msg, suite = FurtherMessage.de_frame(dados, self.max_frame_bytes)
		tenant: str | None = None
		estrategia_json: str | None = None
		try:
			sessao, strategy = self._verificar(msg, suite)
			tenant = sessao.tenant
			estrategia_json = strategy.to_bytes().decode("utf-8")
			self._executar(tenant, strategy)
		except ProtocolError as exc:
			detalhe = exc.codigo if isinstance(exc, (UnknownSessionError, SessionExpiredError)) else f"{exc.codigo}: {exc}"
			logger.warning(f"Estratégia rejeitada ({tenant or 'desconhecido'}): {exc.codigo}: {exc}")
			registrar_acao(tenant, estrategia_json, "FAILURE", detalhe, db_path=self.db_path)
			return AckMessage.criar(self.private_key, suite, msg.bloco.nonce, False, detalhe).para_frame(suite)

		logger.info(f"Estratégia executada para {tenant}: {strategy.descricao()}")
		registrar_acao(tenant, estrategia_json, "SUCCESS", strategy.descricao(), db_path=self.db_path)
		return AckMessage.criar(self.private_key, suite, msg.bloco.nonce, True, strategy.descricao()).para_frame(suite)

	def despachar(self, dados: bytes) -> bytes:
		if len(dados) < 6:
			raise MalformedMessageError("frame curto demais")
		tipo = dados[4]
		if tipo == MessageType.REGISTRATION:
			return self.process_registration(dados)
		if tipo == MessageType.FURTHER:
			return self.process_strategy(dados)
		raise MalformedMessageError(f"tipo de mensagem não aceito pelo servidor: 0x{tipo:02x}")


def process_registration(server_state: ProviderServer, dados: bytes) -> bytes:
	return server_state.process_registration(dados)


def process_strategy(server_state: ProviderServer, dados: bytes) -> bytes:
	return server_state.process_strategy(dados)


class _Atendimento(socketserver.BaseRequestHandler):
	server: "ServidorTCP"

	def handle(self) -> None:
		provedor = self.server.provedor
		sock: socket.socket = self.request
		sock.settimeout(self.server.socket_timeout)
		origem = f"{self.client_address[0]}:{self.client_address[1]}"
		while True:
			try:
				dados = ler_frame(sock, provedor.max_frame_bytes)
				if dados is None:
					break
				enviar_frame(sock, provedor.despachar(dados))
			except ProtocolError as exc:
				logger.warning(f"Conexão de {origem} encerrada: {exc.codigo}: {exc}")
				break
			except (TimeoutError, OSError) as exc:
				logger.debug(f"Conexão de {origem} encerrada: {exc}")
				break
			except Exception:
				logger.exception(f"Erro inesperado atendendo {origem}")
				break


class ServidorTCP(socketserver.ThreadingTCPServer):
	allow_reuse_address = True
	daemon_threads = True

	def __init__(self, endereco: tuple[str, int], provedor: ProviderServer, socket_timeout: float = 10.0):
		self.provedor = provedor
		self.socket_timeout = socket_timeout
		super().__init__(endereco, _Atendimento)

	@property
	def endpoint(self) -> tuple[str, int]:
		host, porta = self.server_address[:2]
		return str(host), int(porta)


def iniciar_em_thread(provedor: ProviderServer, host: str = "127.0.0.1", porta: int = 0, socket_timeout: float = 10.0) -> ServidorTCP:
	"""Sobe o servidor em uma thread daemon; `porta=0` escolhe uma porta livre."""
	servidor = ServidorTCP((host, porta), provedor, socket_timeout)
	threading.Thread(target=servidor.serve_forever, name="harmmtd-servidor", daemon=True).start()
	logger.info(f"Servidor do provedor ouvindo em {servidor.endpoint[0]}:{servidor.endpoint[1]}")
	return servidor
