"""
Testes da configuração:
- Defaults do TOML e fallback para os valores embutidos
- Valores inválidos substituídos sem interromper
- Combinação com as flags da CLI (RunConfig)
"""

from __future__ import annotations

from pathlib import Path

import pytest

from src.config import (
	CONFIG_FILE,
	ConfigError,
	ConfigPadrao,
	RunConfig,
	carregar_config,
	parse_endpoint,
)


def _toml(tmp_path: Path, conteudo: str) -> Path:
	caminho = tmp_path / "harmmtd.toml"
	caminho.write_text(conteudo, encoding="utf-8")
	return caminho


def test_arquivo_do_projeto_bate_com_os_padroes():
	"""O TOML empacotado declara os mesmos valores embutidos."""
	assert carregar_config(CONFIG_FILE) == ConfigPadrao()


def test_arquivo_inexistente_usa_padroes(tmp_path):
	"""Sem arquivo, valem os valores embutidos."""
	assert carregar_config(tmp_path / "nao_existe.toml") == ConfigPadrao()


def test_toml_malformado_usa_padroes(tmp_path):
	"""TOML com erro de sintaxe cai nos valores embutidos."""
	caminho = _toml(tmp_path, "[analise\nmax_depth = ")
	assert carregar_config(caminho) == ConfigPadrao()


def test_valores_validos_sao_lidos(tmp_path):
	"""Valores válidos são lidos e session_timeout vira float."""
	caminho = _toml(tmp_path, """
[analise]
max_depth = 6
workers = 4

[protocolo]
suite = "md5-compat"
session_timeout = 30

[saida]
casas_decimais = 5
""")
	config = carregar_config(caminho)
	assert config.analise.max_depth == 6
	assert config.analise.workers == 4
	assert config.protocolo.suite == "md5-compat"
	assert config.protocolo.session_timeout == 30.0
	assert isinstance(config.protocolo.session_timeout, float)
	assert config.saida.casas_decimais == 5
	assert config.analise.max_paths == 100_000


def test_valores_invalidos_caem_no_padrao(tmp_path):
	"""Cada chave inválida volta ao seu padrão."""
	caminho = _toml(tmp_path, """
[analise]
max_depth = 0
derive_coresidency = "sim"
workers = true

[protocolo]
port = 70000
suite = "sha1"
rsa_bits = 1024
""")
	config = carregar_config(caminho)
	padrao = ConfigPadrao()
	assert config.analise == padrao.analise
	assert config.protocolo == padrao.protocolo


def test_secao_que_nao_e_tabela_e_ignorada(tmp_path):
	"""Seção que não é tabela é ignorada."""
	caminho = _toml(tmp_path, 'analise = "nada"\n')
	assert carregar_config(caminho).analise == ConfigPadrao().analise


def test_variavel_de_ambiente_aponta_o_arquivo(tmp_path, monkeypatch):
	"""HARMMTD_CONFIG aponta o arquivo lido."""
	caminho = _toml(tmp_path, "[protocolo]\nport = 9000\n")
	monkeypatch.setenv("HARMMTD_CONFIG", str(caminho))
	assert carregar_config().protocolo.port == 9000


class TestRunConfig:
	def test_sobrescritas_none_mantem_padrao(self):
		"""Sobrescrita None mantém o padrão do TOML."""
		config = RunConfig.a_partir_de(ConfigPadrao(), max_depth=None, workers=3, out_dir=Path("x"))
		assert config.max_depth == 12
		assert config.workers == 3
		assert config.estrategia_path == Path("x") / "estrategia.json"
		assert config.limits.max_paths == 100_000

	def test_caminho_de_estrategia_explicito(self):
		"""--strategy tem precedência sobre out_dir/estrategia.json."""
		config = RunConfig(strategy_path=Path("e.json"))
		assert config.estrategia_path == Path("e.json")

	@pytest.mark.parametrize(
		"kwargs",
		[
			{"interval_seconds": 0},
			{"rounds": 0},
			{"workers": 0},
			{"max_depth": 0},
			{"max_paths": 0},
			{"port": 0},
			{"suite": "sha1"},
		],
	)
	def test_combinacoes_invalidas(self, kwargs):
		"""Combinações fora da faixa levantam ConfigError."""
		with pytest.raises(ConfigError):
			RunConfig(**kwargs)


class TestEndpoint:
	def test_host_e_porta(self):
		"""host:porta é separado em host e porta."""
		assert parse_endpoint("127.0.0.1:7788") == ("127.0.0.1", 7788)
		assert parse_endpoint("provedor.local:80") == ("provedor.local", 80)

	@pytest.mark.parametrize("texto", ["7788", ":7788", "host:", "host:abc", "host:0", "host:65536"])
	def test_invalidos(self, texto):
		"""Endpoints sem host, sem porta ou com porta fora da faixa são rejeitados."""
		with pytest.raises(ConfigError):
			parse_endpoint(texto)
