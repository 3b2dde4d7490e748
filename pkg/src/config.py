"""Configuração da ferramenta: defaults em TOML, variáveis do `.env` e o `RunConfig` da CLI.

O arquivo `config/harmmtd.toml` define os valores padrão. Erros no arquivo nunca
interrompem a execução: são registrados no log e substituídos pelos valores embutidos.
"""

from __future__ import annotations

import os
import tomllib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from dotenv import load_dotenv

from src.harm.modelo import PathLimits
from src.logger import configurar_nivel, setup_logging

logger = setup_logging("config")

PROJECT_ROOT = Path(__file__).resolve().parents[1]
CONFIG_FILE = PROJECT_ROOT / "config" / "harmmtd.toml"
DEFAULT_ENROLLMENT_CSV = PROJECT_ROOT / "data" / "inscricoes.csv"
SUITES_VALIDAS = ("md5-compat", "modern")
_ENV_LOADED = False


class ConfigError(ValueError):
	"""Combinação inválida de parâmetros de execução."""


@dataclass(frozen=True)
class ConfigAnalise:
	max_depth: int = 12
	max_paths: int = 100_000
	derive_coresidency: bool = True
	include_patching: bool = True
	workers: int = 1


@dataclass(frozen=True)
class ConfigProtocolo:
	host: str = "127.0.0.1"
	port: int = 7788
	suite: str = "modern"
	session_timeout: float = 300.0
	max_frame_bytes: int = 1024 * 1024
	socket_timeout: float = 10.0
	rsa_bits: int = 2048


@dataclass(frozen=True)
class ConfigSaida:
	out_dir: str = "saida"
	casas_decimais: int = 3


@dataclass(frozen=True)
class ConfigPadrao:
	analise: ConfigAnalise = field(default_factory=ConfigAnalise)
	protocolo: ConfigProtocolo = field(default_factory=ConfigProtocolo)
	saida: ConfigSaida = field(default_factory=ConfigSaida)


def carregar_env() -> None:
	"""Carrega o `.env` da raiz do projeto (sem sobrescrever variáveis já definidas)."""
	global _ENV_LOADED
	if _ENV_LOADED:
		return
	env_path = PROJECT_ROOT / ".env"
	if env_path.exists():
		load_dotenv(dotenv_path=str(env_path), override=False)
	else:
		load_dotenv(override=False)
	_ENV_LOADED = True
	configurar_nivel()


def _ler_valor(
	secao: dict[str, Any],
	nome_secao: str,
	chave: str,
	padrao: Any,
	*,
	minimo: float | None = None,
	maximo: float | None = None,
	opcoes: tuple[str, ...] | None = None,
) -> Any:
	"""Lê uma chave validando tipo e faixa; qualquer problema cai no valor padrão."""
	if chave not in secao:
		return padrao
	valor = secao[chave]
	tipo = type(padrao)
	# bool é subclasse de int: não aceitar true/false onde se espera número
	if tipo is bool:
		ok = isinstance(valor, bool)
	elif tipo is float:
		ok = isinstance(valor, (int, float)) and not isinstance(valor, bool)
		valor = float(valor) if ok else valor
	elif tipo is int:
		ok = isinstance(valor, int) and not isinstance(valor, bool)
	else:
		ok = isinstance(valor, tipo)
	if ok and minimo is not None and valor < minimo:
		ok = False
	if ok and maximo is not None and valor > maximo:
		ok = False
	if ok and opcoes is not None and valor not in opcoes:
		ok = False
	if not ok:
		logger.error(
			f"Valor inválido para [{nome_secao}].{chave} em {CONFIG_FILE.name}: {valor!r}. "
			f"Usando padrão {padrao!r}"
		)
		return padrao
	return valor


def _montar_config(data: dict[str, Any]) -> ConfigPadrao:
	base = ConfigPadrao()
	analise = data.get("analise", {}) if isinstance(data.get("analise"), dict) else {}
	protocolo = data.get("protocolo", {}) if isinstance(data.get("protocolo"), dict) else {}
	saida = data.get("saida", {}) if isinstance(data.get("saida"), dict) else {}

	a, p, s = base.analise, base.protocolo, base.saida
	return ConfigPadrao(
		analise=ConfigAnalise(
			max_depth=_ler_valor(analise, "analise", "max_depth", a.max_depth, minimo=1),
			max_paths=_ler_valor(analise, "analise", "max_paths", a.max_paths, minimo=1),
			derive_coresidency=_ler_valor(analise, "analise", "derive_coresidency", a.derive_coresidency),
			include_patching=_ler_valor(analise, "analise", "include_patching", a.include_patching),
			workers=_ler_valor(analise, "analise", "workers", a.workers, minimo=1),
		),
		protocolo=ConfigProtocolo(
			host=_ler_valor(protocolo, "protocolo", "host", p.host),
			port=_ler_valor(protocolo, "protocolo", "port", p.port, minimo=1, maximo=65535),
			suite=_ler_valor(protocolo, "protocolo", "suite", p.suite, opcoes=SUITES_VALIDAS),
			session_timeout=_ler_valor(protocolo, "protocolo", "session_timeout", p.session_timeout, minimo=1),
			max_frame_bytes=_ler_valor(protocolo, "protocolo", "max_frame_bytes", p.max_frame_bytes, minimo=1024),
			socket_timeout=_ler_valor(protocolo, "protocolo", "socket_timeout", p.socket_timeout, minimo=0.1),
			rsa_bits=_ler_valor(protocolo, "protocolo", "rsa_bits", p.rsa_bits, minimo=2048),
		),
		saida=ConfigSaida(
			out_dir=_ler_valor(saida, "saida", "out_dir", s.out_dir),
			casas_decimais=_ler_valor(saida, "saida", "casas_decimais", s.casas_decimais, minimo=0, maximo=12),
		),
	)


def carregar_config(caminho: Path | str | None = None) -> ConfigPadrao:
	"""Carrega os defaults do TOML; cai nos valores embutidos se o arquivo faltar ou estiver inválido."""
	if caminho is not None:
		arquivo = Path(caminho)
	elif os.getenv("HARMMTD_CONFIG"):
		arquivo = Path(os.environ["HARMMTD_CONFIG"])
	else:
		arquivo = CONFIG_FILE

	if not arquivo.exists():
		logger.warning(f"Arquivo de configuração não encontrado: {arquivo}. Usando padrões embutidos")
		return ConfigPadrao()

	try:
		with open(arquivo, "rb") as f:
			data = tomllib.load(f)
	except tomllib.TOMLDecodeError as e:
		logger.error(f"Erro de sintaxe TOML em {arquivo}: {e}")
		return ConfigPadrao()
	except OSError as e:
		logger.error(f"Erro de E/S ao ler arquivo de configuração {arquivo}: {e}")
		return ConfigPadrao()

	config = _montar_config(data)
	logger.debug(f"Configuração carregada de {arquivo}")
	return config


@dataclass(frozen=True)
class RunConfig:
	"""Parâmetros efetivos de uma execução da CLI (TOML + flags)."""

	scenario_path: Path | None = None
	max_depth: int = 12
	max_paths: int = 100_000
	derive_coresidency: bool = True
	include_patching: bool = True
	threshold: float | None = None
	interval_seconds: int | None = None
	rounds: int | None = None
	workers: int = 1
	host: str = "127.0.0.1"
	port: int = 7788
	suite: str = "modern"
	session_timeout: float = 300.0
	max_frame_bytes: int = 1024 * 1024
	socket_timeout: float = 10.0
	rsa_bits: int = 2048
	keys_dir: Path | None = None
	ep_code_file: Path | None = None
	enrollment_path: Path = DEFAULT_ENROLLMENT_CSV
	strategy_path: Path | None = None
	out_dir: Path = Path("saida")
	casas_decimais: int = 3

	def __post_init__(self) -> None:
		if self.max_depth < 1:
			raise ConfigError("max_depth precisa ser >= 1")
		if self.max_paths < 1:
			raise ConfigError("max_paths precisa ser >= 1")
		if self.interval_seconds is not None and self.interval_seconds < 1:
			raise ConfigError("interval_seconds precisa ser >= 1")
		if self.rounds is not None and self.rounds < 1:
			raise ConfigError("rounds precisa ser >= 1")
		if self.workers < 1:
			raise ConfigError("workers precisa ser >= 1")
		if not 1 <= self.port <= 65535:
			raise ConfigError(f"porta fora da faixa: {self.port}")
		if self.suite not in SUITES_VALIDAS:
			raise ConfigError(f"suite desconhecida: {self.suite!r}")

	@property
	def limits(self) -> PathLimits:
		return PathLimits(max_depth=self.max_depth, max_paths=self.max_paths)

	@property
	def endpoint(self) -> tuple[str, int]:
		return self.host, self.port

	@property
	def estrategia_path(self) -> Path:
		return self.strategy_path or (self.out_dir / "estrategia.json")

	@classmethod
	def a_partir_de(cls, padrao: ConfigPadrao, **sobrescritas: Any) -> "RunConfig":
		"""Combina os defaults carregados com as sobrescritas vindas da CLI (None = manter padrão)."""
		base: dict[str, Any] = {
			"max_depth": padrao.analise.max_depth,
			"max_paths": padrao.analise.max_paths,
			"derive_coresidency": padrao.analise.derive_coresidency,
			"include_patching": padrao.analise.include_patching,
			"workers": padrao.analise.workers,
			"host": padrao.protocolo.host,
			"port": padrao.protocolo.port,
			"suite": padrao.protocolo.suite,
			"session_timeout": padrao.protocolo.session_timeout,
			"max_frame_bytes": padrao.protocolo.max_frame_bytes,
			"socket_timeout": padrao.protocolo.socket_timeout,
			"rsa_bits": padrao.protocolo.rsa_bits,
			"out_dir": Path(padrao.saida.out_dir),
			"casas_decimais": padrao.saida.casas_decimais,
		}
		base.update({chave: valor for chave, valor in sobrescritas.items() if valor is not None})
		return cls(**base)


def parse_endpoint(texto: str) -> tuple[str, int]:
	"""Converte "host:porta" em tupla; porta obrigatória."""
	host, sep, porta = texto.rpartition(":")
	if not sep or not host:
		raise ConfigError(f"endpoint inválido (esperado host:porta): {texto!r}")
	try:
		numero = int(porta)
	except ValueError as exc:
		raise ConfigError(f"porta inválida em {texto!r}") from exc
	if not 1 <= numero <= 65535:
		raise ConfigError(f"porta fora da faixa em {texto!r}")
	return host, numero
