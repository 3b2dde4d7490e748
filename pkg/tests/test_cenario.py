"""Testes da leitura e gravação dos arquivos de cenário."""

from __future__ import annotations

import json

import pytest

from src.harm.cenario import ScenarioError, carregar_cenario, parse_cenario, salvar_cenario

from tests.conftest import EP2_PATH, ler_json

CENARIO_MINIMO = """{
  "tenant": "EP1",
  "ep_code": "EP1-SECRET",
  "hosts": [
    {"id": "h1", "capacity": 2},
    {"id": "h2", "capacity": 2}
  ],
  "vms": [
    {
      "vm_id": "web",
      "tenant": "EP1",
      "host_id": "h1",
      "internet_facing": true,
      "vulnerabilities": [
        {"cve_id": "CVE-2018-15126", "base_score": 8.1, "exploitability": 0.22, "impact": 5.9}
      ]
    }
  ],
  "edges": [
    {"from": "web", "to": "db"},
    {"from": "web", "to": "db"}
  ],
  "target": {"id": "db", "host_id": "h2"}
}
"""


def _com(**trocas) -> str:
	dados = json.loads(CENARIO_MINIMO)
	dados.update(trocas)
	return json.dumps(dados, indent=2)


class TestLeitura:
	def test_cenario_minimo(self):
		"""Lê o cenário mínimo com os padrões de nome, custo de ataque e correção."""
		cenario = parse_cenario(CENARIO_MINIMO)
		assert cenario.ep_code == "EP1-SECRET"
		assert cenario.tenant == "EP1"
		web = cenario.cloud.vm("web")
		assert web.internet_facing
		assert web.display_name == "web"
		folha = web.attack_tree.leaves[0]
		assert folha.attack_cost == 1.0
		assert folha.patchable is True

	def test_arestas_repetidas_colapsam(self):
		"""Arestas declaradas em duplicidade viram uma só."""
		cenario = parse_cenario(CENARIO_MINIMO)
		assert cenario.topology.edges == (("web", "db"),)

	def test_alvo_herda_locatario_do_cenario(self):
		"""Sem target.tenant, o alvo herda o locatário do cenário e não é explorável."""
		cenario = parse_cenario(CENARIO_MINIMO)
		alvo = cenario.cloud.vm("db")
		assert alvo.is_target
		assert alvo.tenant == "EP1"
		assert not alvo.attack_tree.exploitable

	def test_alvo_sem_locatario_vai_para_o_provedor(self):
		"""Sem locatário em lugar nenhum, o alvo pertence ao provedor."""
		dados = json.loads(CENARIO_MINIMO)
		del dados["tenant"]
		cenario = parse_cenario(json.dumps(dados))
		assert cenario.cloud.vm("db").tenant == "provider"

	def test_cenario_ep2_empacotado(self):
		"""O cenário EP2 distribuído em data/cenarios carrega com o alvo do EP2."""
		cenario = carregar_cenario(EP2_PATH)
		assert cenario.tenant == "EP2"
		assert cenario.cloud.target_id == "ep2-db"
		assert cenario.cloud.vm("ep1-web").tenant == "EP1"


class TestErros:
	def test_json_invalido_aponta_linha_e_coluna(self):
		"""JSON malformado gera ScenarioError com arquivo:linha:coluna."""
		texto = CENARIO_MINIMO.replace('"capacity": 2},\n', '"capacity": 2}\n', 1)
		with pytest.raises(ScenarioError) as exc:
			parse_cenario(texto, arquivo="quebrado.json")
		assert exc.value.linha == 6
		assert exc.value.coluna is not None
		assert str(exc.value).startswith("quebrado.json:6:")

	def test_aresta_para_vm_inexistente_aponta_linha(self):
		"""Aresta para VM desconhecida aponta a linha da aresta."""
		texto = CENARIO_MINIMO.replace('{"from": "web", "to": "db"},', '{"from": "fantasma", "to": "db"},')
		with pytest.raises(ScenarioError) as exc:
			parse_cenario(texto)
		assert "fantasma" in str(exc.value)
		assert exc.value.linha == 20

	def test_campo_obrigatorio_ausente(self):
		"""Campo obrigatório ausente é nomeado na mensagem."""
		texto = CENARIO_MINIMO.replace('"host_id": "h1",', "")
		with pytest.raises(ScenarioError, match="host_id"):
			parse_cenario(texto)

	def test_tipo_invalido(self):
		"""Capacidade com tipo errado é rejeitada."""
		texto = CENARIO_MINIMO.replace('"capacity": 2},\n', '"capacity": "dois"},\n', 1)
		with pytest.raises(ScenarioError, match="capacity"):
			parse_cenario(texto)

	def test_vm_duplicada(self):
		"""Dois vm_id iguais são rejeitados."""
		dados = json.loads(CENARIO_MINIMO)
		dados["vms"].append(dict(dados["vms"][0]))
		with pytest.raises(ScenarioError, match="duplicado"):
			parse_cenario(json.dumps(dados))

	def test_capacidade_excedida(self):
		"""Host com mais VMs que a capacidade é rejeitado."""
		dados = json.loads(CENARIO_MINIMO)
		dados["hosts"][1]["capacity"] = 0
		with pytest.raises(ScenarioError):
			parse_cenario(json.dumps(dados))

	def test_metricas_fora_da_faixa(self):
		"""Impacto acima de 10 é rejeitado."""
		texto = CENARIO_MINIMO.replace('"impact": 5.9', '"impact": 12.0')
		with pytest.raises(ScenarioError, match="impact"):
			parse_cenario(texto)

	def test_arquivo_inexistente(self, tmp_path):
		"""Arquivo ausente vira ScenarioError."""
		with pytest.raises(ScenarioError):
			carregar_cenario(tmp_path / "nao_existe.json")


def test_salvar_cenario_preserva_conteudo(tmp_path, cenario_ep1):
	"""O dump recarrega igual e sai com chaves ordenadas e indentação de 2 espaços."""
	destino = salvar_cenario(cenario_ep1, tmp_path / "dump.json")
	recarregado = carregar_cenario(destino)
	assert recarregado.cloud.placement == cenario_ep1.cloud.placement
	assert set(recarregado.topology.edges) == set(cenario_ep1.topology.edges)
	assert recarregado.ep_code == cenario_ep1.ep_code
	assert dict(recarregado.addresses) == dict(cenario_ep1.addresses)
	texto = destino.read_text(encoding="utf-8")
	assert texto == json.dumps(ler_json(destino), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
