"""Enquadramento binário sobre TCP.

frame = comprimento (4 bytes BE, cobre tipo + suíte + payload) ∥ tipo (1) ∥ suíte (1) ∥ payload
payload = sequência de campos, cada um com prefixo de 2 bytes BE.
"""

from __future__ import annotations

import socket
import struct
from dataclasses import dataclass
from enum import IntEnum
from typing import Sequence

from .erros import FrameTooLargeError, MalformedMessageError

_CABECALHO = struct.Struct(">I")
_CAMPO = struct.Struct(">H")
MAX_CAMPO = 0xFFFF
MAX_FRAME_PADRAO = 1024 * 1024


class MessageType(IntEnum):
	REGISTRATION = 0x01
	REPLY = 0x02
	FURTHER = 0x03
	ACK = 0x04


@dataclass(frozen=True, slots=True)
class Frame:
	tipo: int
	suite: int
	payload: bytes

	def to_bytes(self) -> bytes:
		return codificar_frame(self.tipo, self.suite, self.payload)


def codificar_frame(tipo: int, suite: int, payload: bytes) -> bytes:
	return _CABECALHO.pack(2 + len(payload)) + bytes((tipo, suite)) + payload


def decodificar_frame(dados: bytes, max_bytes: int = MAX_FRAME_PADRAO) -> Frame:
	"""Decodifica um frame completo; o comprimento declarado precisa bater com os bytes recebidos."""
	if len(dados) < _CABECALHO.size + 2:
		raise MalformedMessageError("frame curto demais")
	(comprimento,) = _CABECALHO.unpack_from(dados)
	if comprimento > max_bytes:
		raise FrameTooLargeError(f"frame de {comprimento} bytes excede o limite {max_bytes}")
	if comprimento != len(dados) - _CABECALHO.size:
		raise MalformedMessageError(
			f"comprimento declarado {comprimento} difere do recebido {len(dados) - _CABECALHO.size}"
		)
	return Frame(dados[4], dados[5], bytes(dados[6:]))


def empacotar_campos(campos: Sequence[bytes]) -> bytes:
	partes = bytearray()
	for campo in campos:
		if len(campo) > MAX_CAMPO:
			raise MalformedMessageError(f"campo de {len(campo)} bytes excede {MAX_CAMPO}")
		partes.extend(_CAMPO.pack(len(campo)))
		partes.extend(campo)
	return bytes(partes)


def desempacotar_campos(payload: bytes, quantidade: int) -> list[bytes]:
	"""Separa exatamente `quantidade` campos; sobra ou falta de bytes é erro."""
	campos: list[bytes] = []
	pos = 0
	for indice in range(quantidade):
		if pos + _CAMPO.size > len(payload):
			raise MalformedMessageError(f"campo {indice} truncado")
		(tamanho,) = _CAMPO.unpack_from(payload, pos)
		pos += _CAMPO.size
		if pos + tamanho > len(payload):
			raise MalformedMessageError(f"campo {indice} declara {tamanho} bytes além do fim")
		campos.append(payload[pos:pos + tamanho])
		pos += tamanho
	if pos != len(payload):
		raise MalformedMessageError(f"{len(payload) - pos} bytes sobrando após {quantidade} campos")
	return campos


def _ler_exato(sock: socket.socket, n: int) -> bytes | None:
	dados = bytearray()
	while len(dados) < n:
		bloco = sock.recv(n - len(dados))
		if not bloco:
			if not dados:
				return None
			raise MalformedMessageError(f"conexão encerrada no meio do frame ({len(dados)}/{n} bytes)")
		dados.extend(bloco)
	return bytes(dados)


def ler_frame(sock: socket.socket, max_bytes: int = MAX_FRAME_PADRAO) -> bytes | None:
	"""Lê um frame completo (bytes crus). `None` se o par fechou a conexão entre frames."""
	cabecalho = _ler_exato(sock, _CABECALHO.size)
	if cabecalho is None:
		return None
	(comprimento,) = _CABECALHO.unpack(cabecalho)
	if comprimento > max_bytes:
		raise FrameTooLargeError(f"frame de {comprimento} bytes excede o limite {max_bytes}")
	if comprimento < 2:
		raise MalformedMessageError("frame sem tipo/suíte")
	corpo = _ler_exato(sock, comprimento)
	if corpo is None:
		raise MalformedMessageError("conexão encerrada após o cabeçalho")
	return cabecalho + corpo


def enviar_frame(sock: socket.socket, dados: bytes) -> None:
	sock.sendall(dados)
