"""Camada de persistência do provedor em SQLite3.

Guarda a tabela de inscrições (EP-code → locatário), o registro das sessões abertas
pelo protocolo e o histórico de ações solicitadas pelas empresas. As chaves
compartilhadas nunca são gravadas: vivem apenas na memória do servidor.
"""

from __future__ import annotations

import csv
import sqlite3
from contextlib import contextmanager
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

from src.logger import setup_logging

logger = setup_logging("database")

_BASE_DIR = Path(__file__).resolve().parents[2]
DEFAULT_DB_PATH = _BASE_DIR / "data" / "provedor.db"
DEFAULT_INSCRICOES_CSV = _BASE_DIR / "data" / "inscricoes.csv"
EP_CODE_MIN_BYTES = 8
EP_CODE_MAX_BYTES = 64


def _resolver_caminho_banco(db_path: Path | str | None = None) -> Path:
	"""Resolve o caminho do banco de dados e garante que o diretório pai existe."""
	path = DEFAULT_DB_PATH if db_path is None else Path(db_path)
	path.parent.mkdir(parents=True, exist_ok=True)
	return path


_SCHEMA_DEFINITIONS: tuple[str, ...] = (
	"""
	CREATE TABLE IF NOT EXISTS inscricoes (
		ep_code TEXT PRIMARY KEY,
		tenant TEXT NOT NULL,
		criado_em TIMESTAMP DEFAULT CURRENT_TIMESTAMP
	)
	""",
	"""
	CREATE TABLE IF NOT EXISTS sessoes (
		key_id TEXT PRIMARY KEY,
		tenant TEXT NOT NULL,
		contador INTEGER NOT NULL,
		criado_em TIMESTAMP DEFAULT CURRENT_TIMESTAMP
	)
	""",
	"""
	CREATE TABLE IF NOT EXISTS acoes_historico (
		id INTEGER PRIMARY KEY AUTOINCREMENT,
		tenant TEXT,
		estrategia_json TEXT,
		status TEXT NOT NULL,
		detalhe TEXT,
		criado_em TIMESTAMP DEFAULT CURRENT_TIMESTAMP
	)
	""",
	"CREATE INDEX IF NOT EXISTS idx_sessoes_tenant ON sessoes (tenant)",
	"CREATE INDEX IF NOT EXISTS idx_acoes_tenant ON acoes_historico (tenant)",
)


@dataclass(slots=True)
class Sessao:
	key_id: str
	tenant: str
	contador: int
	criado_em: str | None = None


@dataclass(slots=True)
class AcaoRegistrada:
	id: int
	tenant: str | None
	estrategia_json: str | None
	status: str
	detalhe: str | None
	criado_em: str | None = None


def _aplicar_schema(con: sqlite3.Connection) -> None:
	"""Cria tabelas e índices se não existirem."""
	for ddl in _SCHEMA_DEFINITIONS:
		con.execute(ddl)


@contextmanager
def conexao(db_path: Path | str | None = None) -> Iterator[sqlite3.Connection]:
	"""Abre uma conexão com o SQLite garantindo que o schema exista."""

	con = sqlite3.connect(str(_resolver_caminho_banco(db_path)), timeout=10.0)
	try:
		_aplicar_schema(con)
		yield con
		con.commit()
	except sqlite3.Error as e:
		con.rollback()
		logger.error(f"Erro no banco de dados: {e}")
		raise
	finally:
		con.close()


def inicializar_banco(db_path: Path | str | None = None) -> sqlite3.Connection:
	"""Cria (se necessário) e retorna uma conexão pronta para uso."""

	con = sqlite3.connect(str(_resolver_caminho_banco(db_path)))
	_aplicar_schema(con)
	logger.info("Schema do banco de dados inicializado com sucesso.")
	return con


def ep_code_valido(ep_code: str) -> bool:
	return EP_CODE_MIN_BYTES <= len(ep_code.encode("utf-8")) <= EP_CODE_MAX_BYTES


def registrar_inscricao(ep_code: str, tenant: str, *, db_path: Path | str | None = None) -> None:
	"""Inscreve (ou reatribui) um EP-code para o locatário."""
	if not ep_code_valido(ep_code):
		raise ValueError(f"EP-code precisa ter entre {EP_CODE_MIN_BYTES} e {EP_CODE_MAX_BYTES} bytes")
	if not tenant.strip():
		raise ValueError("tenant não pode ser vazio")
	with conexao(db_path) as con:
		con.execute(
			"""
			INSERT INTO inscricoes (ep_code, tenant) VALUES (?, ?)
			ON CONFLICT(ep_code) DO UPDATE SET tenant = excluded.tenant
			""",
			[ep_code, tenant.strip()],
		)


def seed_inscricoes_csv(
	csv_path: Path | str | None = None,
	*, db_path: Path | str | None = None,
) -> int:
	"""Importa inscrições a partir de um CSV (ep_code,tenant).

	Linhas repetidas ou inválidas são ignoradas. Retorna o total de novas inscrições.
	"""

	caminho = Path(csv_path) if csv_path is not None else DEFAULT_INSCRICOES_CSV
	if not caminho.exists():
		raise FileNotFoundError(f"Arquivo de inscrições não encontrado: {caminho}")

	with caminho.open(encoding="utf-8") as arquivo:
		reader = csv.DictReader(arquivo)
		registros: list[tuple[str, str]] = []
		for numero, linha in enumerate(reader, start=2):
			ep_code = (linha.get("ep_code") or "").strip()
			tenant = (linha.get("tenant") or "").strip()
			if not ep_code or not tenant:
				continue
			if not ep_code_valido(ep_code):
				logger.warning(f"{caminho.name}:{numero}: EP-code com tamanho inválido ignorado")
				continue
			registros.append((ep_code, tenant))

	inseridos = 0
	with conexao(db_path) as con:
		for ep_code, tenant in registros:
			cursor = con.execute(
				"INSERT OR IGNORE INTO inscricoes (ep_code, tenant) VALUES (?, ?)",
				[ep_code, tenant],
			)
			inseridos += cursor.rowcount
	if inseridos:
		logger.info(f"{inseridos} inscrições importadas de {caminho.name}")
	return inseridos


def obter_tenant_por_ep_code(ep_code: str, *, db_path: Path | str | None = None) -> str | None:
	with conexao(db_path) as con:
		row = con.execute("SELECT tenant FROM inscricoes WHERE ep_code = ?", [ep_code]).fetchone()
	return row[0] if row else None


def listar_inscricoes(*, db_path: Path | str | None = None) -> dict[str, str]:
	with conexao(db_path) as con:
		rows = con.execute("SELECT ep_code, tenant FROM inscricoes ORDER BY tenant, ep_code").fetchall()
	return {row[0]: row[1] for row in rows}


def registrar_sessao(key_id: str, tenant: str, *, db_path: Path | str | None = None) -> int:
	"""Registra a sessão e devolve o contador monotônico de sessões do locatário."""
	with conexao(db_path) as con:
		(atual,) = con.execute(
			"SELECT COALESCE(MAX(contador), 0) FROM sessoes WHERE tenant = ?",
			[tenant],
		).fetchone()
		contador = int(atual) + 1
		con.execute(
			"INSERT OR REPLACE INTO sessoes (key_id, tenant, contador) VALUES (?, ?, ?)",
			[key_id, tenant, contador],
		)
	return contador


def listar_sessoes(tenant: str | None = None, *, db_path: Path | str | None = None) -> list[Sessao]:
	query = "SELECT key_id, tenant, contador, criado_em FROM sessoes"
	params: list[str] = []
	if tenant is not None:
		query += " WHERE tenant = ?"
		params.append(tenant)
	query += " ORDER BY tenant, contador"
	with conexao(db_path) as con:
		rows = con.execute(query, params).fetchall()
	return [Sessao(key_id=r[0], tenant=r[1], contador=r[2], criado_em=r[3]) for r in rows]


def registrar_acao(
	tenant: str | None,
	estrategia_json: str | None,
	status: str,
	detalhe: str | None = None,
	*,
	db_path: Path | str | None = None,
) -> int:
	with conexao(db_path) as con:
		cursor = con.execute(
			"""
			INSERT INTO acoes_historico (tenant, estrategia_json, status, detalhe)
			VALUES (?, ?, ?, ?)
			""",
			[tenant, estrategia_json, status, detalhe],
		)
		return int(cursor.lastrowid)


def listar_acoes(tenant: str | None = None, *, db_path: Path | str | None = None) -> list[AcaoRegistrada]:
	query = "SELECT id, tenant, estrategia_json, status, detalhe, criado_em FROM acoes_historico"
	params: list[str] = []
	if tenant is not None:
		query += " WHERE tenant = ?"
		params.append(tenant)
	query += " ORDER BY id"
	with conexao(db_path) as con:
		rows = con.execute(query, params).fetchall()
	return [
		AcaoRegistrada(id=r[0], tenant=r[1], estrategia_json=r[2], status=r[3], detalhe=r[4], criado_em=r[5])
		for r in rows
	]
