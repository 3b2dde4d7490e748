from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import pytest

from src.harm.cenario import Cenario, carregar_cenario
from src.protocolo.cripto import gerar_par_chaves

RAIZ = Path(__file__).resolve().parents[1]
CENARIOS = RAIZ / "data" / "cenarios"
EP1_PATH = CENARIOS / "ep1.json"
EP2_PATH = CENARIOS / "ep2.json"
EXEMPLO1_PATH = CENARIOS / "exemplo1.json"
INSCRICOES_CSV = RAIZ / "data" / "inscricoes.csv"
FIXTURES = Path(__file__).resolve().parent / "fixtures"
NESSUS_PATH = FIXTURES / "varredura_ep1.nessus"


def ler_json(caminho: Path) -> dict[str, Any]:
	return json.loads(caminho.read_text(encoding="utf-8"))


@pytest.fixture
def cenario_ep1() -> Cenario:
	return carregar_cenario(EP1_PATH)


@pytest.fixture
def cenario_exemplo1() -> Cenario:
	return carregar_cenario(EXEMPLO1_PATH)


@pytest.fixture(scope="session")
def chave_provedor():
	"""Par RSA do provedor, gerado uma vez por sessão de testes."""
	return gerar_par_chaves(2048)


@pytest.fixture(scope="session")
def chave_ep1():
	return gerar_par_chaves(2048)


@pytest.fixture(scope="session")
def chave_ep2():
	return gerar_par_chaves(2048)
