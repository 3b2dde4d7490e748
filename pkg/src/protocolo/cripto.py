"""Primitivas criptográficas e suítes do canal provedor/empresa.

As duas suítes usam RSA-OAEP(SHA-256) para cifrar, RSA-PSS(SHA-256) para assinar e
AES-256-GCM com IV aleatório de 96 bits. Elas diferem apenas no resumo dos campos:
MD5 (`md5-compat`) ou SHA-256 (`modern`).
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import padding, rsa
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from .erros import DecryptionFailureError, SignatureInvalidError, UnknownSuiteError

TAMANHO_CHAVE = 32
TAMANHO_IV = 12
TAMANHO_NONCE = 16
TAMANHO_KEY_ID = 16
ROTULO_KEY_ID = b"harmmtd-key-id"
EXPOENTE_PUBLICO = 65537


@dataclass(frozen=True, slots=True)
class Suite:
	codigo: int
	nome: str
	algoritmo: Callable[[], hashes.HashAlgorithm]

	@property
	def tamanho_digest(self) -> int:
		return self.algoritmo().digest_size

	def digest(self, dados: bytes) -> bytes:
		h = hashes.Hash(self.algoritmo())
		h.update(dados)
		return h.finalize()


MD5_COMPAT = Suite(0x01, "md5-compat", hashes.MD5)
MODERN = Suite(0x02, "modern", hashes.SHA256)
SUITES = {s.codigo: s for s in (MD5_COMPAT, MODERN)}


def suite_por_nome(nome: str) -> Suite:
	for suite in SUITES.values():
		if suite.nome == nome:
			return suite
	raise UnknownSuiteError(f"suíte desconhecida: {nome!r}")


def suite_por_codigo(codigo: int) -> Suite:
	try:
		return SUITES[codigo]
	except KeyError:
		raise UnknownSuiteError(f"suíte desconhecida: 0x{codigo:02x}") from None


def _oaep() -> padding.OAEP:
	return padding.OAEP(mgf=padding.MGF1(algorithm=hashes.SHA256()), algorithm=hashes.SHA256(), label=None)


def _pss() -> padding.PSS:
	return padding.PSS(mgf=padding.MGF1(hashes.SHA256()), salt_length=padding.PSS.MAX_LENGTH)


def gerar_par_chaves(bits: int = 2048) -> rsa.RSAPrivateKey:
	return rsa.generate_private_key(public_exponent=EXPOENTE_PUBLICO, key_size=bits)


def cifrar_rsa(publica: rsa.RSAPublicKey, dados: bytes) -> bytes:
	return publica.encrypt(dados, _oaep())


def decifrar_rsa(privada: rsa.RSAPrivateKey, dados: bytes) -> bytes:
	try:
		return privada.decrypt(dados, _oaep())
	except ValueError as exc:
		raise DecryptionFailureError("falha ao decifrar com a chave privada") from exc


def assinar(privada: rsa.RSAPrivateKey, dados: bytes) -> bytes:
	return privada.sign(dados, _pss(), hashes.SHA256())


def verificar_assinatura(publica: rsa.RSAPublicKey, assinatura: bytes, dados: bytes) -> None:
	try:
		publica.verify(assinatura, dados, _pss(), hashes.SHA256())
	except InvalidSignature as exc:
		raise SignatureInvalidError("assinatura inválida") from exc


def cifrar_aes(chave: bytes, dados: bytes, aad: bytes | None = None) -> tuple[bytes, bytes]:
	"""Devolve (iv, texto cifrado com tag)."""
	iv = os.urandom(TAMANHO_IV)
	return iv, AESGCM(chave).encrypt(iv, dados, aad)


def decifrar_aes(chave: bytes, iv: bytes, dados: bytes, aad: bytes | None = None) -> bytes:
	if len(iv) != TAMANHO_IV:
		raise DecryptionFailureError(f"IV com {len(iv)} bytes (esperado {TAMANHO_IV})")
	try:
		return AESGCM(chave).decrypt(iv, dados, aad)
	except InvalidTag as exc:
		raise DecryptionFailureError("falha de autenticação AES-GCM") from exc


def nova_chave_simetrica() -> bytes:
	return AESGCM.generate_key(bit_length=TAMANHO_CHAVE * 8)


def novo_nonce() -> bytes:
	return os.urandom(TAMANHO_NONCE)


def derivar_key_id(chave: bytes) -> bytes:
	"""Identificador público da sessão: SHA-256(rótulo ∥ chave) truncado em 16 bytes."""
	h = hashes.Hash(hashes.SHA256())
	h.update(ROTULO_KEY_ID + chave)
	return h.finalize()[:TAMANHO_KEY_ID]


def publica_para_der(publica: rsa.RSAPublicKey) -> bytes:
	return publica.public_bytes(
		encoding=serialization.Encoding.DER,
		format=serialization.PublicFormat.SubjectPublicKeyInfo,
	)


def publica_de_der(dados: bytes) -> rsa.RSAPublicKey:
	try:
		chave = serialization.load_der_public_key(dados)
	except ValueError as exc:
		raise DecryptionFailureError("chave pública ilegível") from exc
	if not isinstance(chave, rsa.RSAPublicKey):
		raise DecryptionFailureError("chave pública não é RSA")
	return chave


def salvar_chave_privada(chave: rsa.RSAPrivateKey, caminho: Path) -> Path:
	caminho.parent.mkdir(parents=True, exist_ok=True)
	caminho.write_bytes(chave.private_bytes(
		encoding=serialization.Encoding.PEM,
		format=serialization.PrivateFormat.PKCS8,
		encryption_algorithm=serialization.NoEncryption(),
	))
	os.chmod(caminho, 0o600)
	return caminho


def salvar_chave_publica(chave: rsa.RSAPublicKey, caminho: Path) -> Path:
	caminho.parent.mkdir(parents=True, exist_ok=True)
	caminho.write_bytes(chave.public_bytes(
		encoding=serialization.Encoding.PEM,
		format=serialization.PublicFormat.SubjectPublicKeyInfo,
	))
	return caminho


def carregar_chave_privada(caminho: Path) -> rsa.RSAPrivateKey:
	chave = serialization.load_pem_private_key(caminho.read_bytes(), password=None)
	if not isinstance(chave, rsa.RSAPrivateKey):
		raise ValueError(f"{caminho}: chave privada não é RSA")
	return chave


def carregar_chave_publica(caminho: Path) -> rsa.RSAPublicKey:
	chave = serialization.load_pem_public_key(caminho.read_bytes())
	if not isinstance(chave, rsa.RSAPublicKey):
		raise ValueError(f"{caminho}: chave pública não é RSA")
	return chave


@dataclass(slots=True)
class KeyMaterial:
	"""Material da empresa: par RSA, EP-code e, após o registro, a chave compartilhada."""

	private_key: rsa.RSAPrivateKey
	ep_code: str
	shared_key: bytes | None = None
	nonces_vistos: set[bytes] = field(default_factory=set)

	@property
	def public_key(self) -> rsa.RSAPublicKey:
		return self.private_key.public_key()

	@property
	def key_id(self) -> bytes | None:
		return derivar_key_id(self.shared_key) if self.shared_key is not None else None
