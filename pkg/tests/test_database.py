from __future__ import annotations

import sqlite3

import pytest

from src.database import (
	conexao,
	ep_code_valido,
	inicializar_banco,
	listar_acoes,
	listar_inscricoes,
	listar_sessoes,
	obter_tenant_por_ep_code,
	registrar_acao,
	registrar_inscricao,
	registrar_sessao,
	seed_inscricoes_csv,
)

from tests.conftest import INSCRICOES_CSV


def test_inicializar_banco_cria_tabelas(tmp_path):
	"""Cria as tabelas de inscrições, sessões e histórico."""
	db_path = tmp_path / "provedor.db"
	con = inicializar_banco(db_path)
	try:
		tabelas = {row[0] for row in con.execute("SELECT name FROM sqlite_master WHERE type = 'table'")}
	finally:
		con.close()
	assert {"inscricoes", "sessoes", "acoes_historico"} <= tabelas


def test_seed_csv_e_idempotente(tmp_path):
	"""Importar o CSV duas vezes não duplica inscrições."""
	db_path = tmp_path / "provedor.db"
	assert seed_inscricoes_csv(INSCRICOES_CSV, db_path=db_path) == 2
	assert seed_inscricoes_csv(INSCRICOES_CSV, db_path=db_path) == 0
	assert listar_inscricoes(db_path=db_path) == {"EP1-SECRET": "EP1", "EP2-SECRET": "EP2"}


def test_seed_ignora_linhas_invalidas(tmp_path):
	"""Linhas sem tenant ou com EP-code fora do tamanho são ignoradas."""
	csv_path = tmp_path / "inscricoes.csv"
	csv_path.write_text(
		"ep_code,tenant\n"
		"curto,EP9\n"
		",EP8\n"
		"CODIGO-SEM-TENANT,\n"
		f"{'X' * 65},EP7\n"
		"EP3-VALIDO,EP3\n",
		encoding="utf-8",
	)
	db_path = tmp_path / "provedor.db"
	assert seed_inscricoes_csv(csv_path, db_path=db_path) == 1
	assert listar_inscricoes(db_path=db_path) == {"EP3-VALIDO": "EP3"}


def test_seed_sem_arquivo(tmp_path):
	"""CSV ausente levanta FileNotFoundError."""
	with pytest.raises(FileNotFoundError):
		seed_inscricoes_csv(tmp_path / "nao_existe.csv", db_path=tmp_path / "provedor.db")


@pytest.mark.parametrize(
	"ep_code, valido",
	[("1234567", False), ("12345678", True), ("x" * 64, True), ("x" * 65, False), ("çççç", True), ("ççç", False)],
)
def test_ep_code_valido_conta_bytes_utf8(ep_code, valido):
	"""O tamanho do EP-code conta bytes UTF-8, não caracteres."""
	assert ep_code_valido(ep_code) is valido


def test_lookup_por_ep_code(tmp_path):
	"""A busca por EP-code diferencia maiúsculas."""
	db_path = tmp_path / "provedor.db"
	registrar_inscricao("EP5-SEGREDO", "EP5", db_path=db_path)
	assert obter_tenant_por_ep_code("EP5-SEGREDO", db_path=db_path) == "EP5"
	assert obter_tenant_por_ep_code("ep5-segredo", db_path=db_path) is None


def test_contador_de_sessoes_monotonico_por_locatario(tmp_path):
	"""O contador de sessões cresce por locatário."""
	db_path = tmp_path / "provedor.db"
	assert registrar_sessao("aa", "EP1", db_path=db_path) == 1
	assert registrar_sessao("bb", "EP1", db_path=db_path) == 2
	assert registrar_sessao("cc", "EP2", db_path=db_path) == 1
	assert registrar_sessao("dd", "EP1", db_path=db_path) == 3

	sessoes = listar_sessoes("EP1", db_path=db_path)
	assert [(s.key_id, s.contador) for s in sessoes] == [("aa", 1), ("bb", 2), ("dd", 3)]
	assert len(listar_sessoes(db_path=db_path)) == 4


def test_historico_de_acoes(tmp_path):
	"""O histórico guarda ações em ordem, com ou sem locatário."""
	db_path = tmp_path / "provedor.db"
	primeiro = registrar_acao("EP1", '{"kind":"Patch"}', "SUCCESS", "Patch CVE-1 em vm1", db_path=db_path)
	segundo = registrar_acao(None, None, "FAILURE", "unknown_session", db_path=db_path)
	assert segundo > primeiro

	todas = listar_acoes(db_path=db_path)
	assert [(a.tenant, a.status, a.detalhe) for a in todas] == [
		("EP1", "SUCCESS", "Patch CVE-1 em vm1"),
		(None, "FAILURE", "unknown_session"),
	]
	assert [a.id for a in listar_acoes("EP1", db_path=db_path)] == [primeiro]
	assert todas[0].criado_em is not None


def test_conexao_desfaz_em_erro(tmp_path):
	"""Erro dentro de conexao desfaz a transação."""
	db_path = tmp_path / "provedor.db"
	with pytest.raises(sqlite3.IntegrityError):
		with conexao(db_path) as con:
			con.execute("INSERT INTO inscricoes (ep_code, tenant) VALUES (?, ?)", ["EP1-SECRET", "EP1"])
			con.execute("INSERT INTO inscricoes (ep_code, tenant) VALUES (?, ?)", ["EP1-SECRET", "EP1"])
	assert listar_inscricoes(db_path=db_path) == {}
