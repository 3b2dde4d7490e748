"""Testes das métricas de risco (CR, RoA, MAPL) e da exportação."""

from __future__ import annotations

import json
from dataclasses import replace

import pandas as pd
import pytest

from src.harm import (
	ATTACKER_ID,
	AttackPath,
	AttackTree,
	PathExplosionError,
	PathLimits,
	TopologyDecl,
	VmNode,
	Vulnerability,
	build_harm,
)
from src.metricas import (
	UnresolvedNodeError,
	cloud_risk,
	mapl,
	metrics_report,
	path_risk,
	return_on_attack,
)
from src.nuvem import CloudState, Host

V5 = Vulnerability("CVE-2018-15126", 8.1, 0.22, 5.9)


def _vm(vm_id: str, vulns=(V5,), *, internet: bool = False, alvo: bool = False) -> VmNode:
	return VmNode(
		vm_id, vm_id, "Ubuntu", "EP1", "h1",
		internet_facing=internet,
		attack_tree=AttackTree(tuple(vulns)),
		is_target=alvo,
	)


def _grafo(vms, arestas, *, limite: int = 20):
	estado = CloudState.criar([Host("h1", limite)], vms, "db")
	return build_harm(estado, TopologyDecl(tuple(arestas), "db"))


class TestExemplo1:
	def test_caminho_unico_soma_7_08(self, cenario_exemplo1):
		"""O cenário de exemplo tem um único caminho de risco 7.08 e seis arestas."""
		h = build_harm(cenario_exemplo1.cloud, cenario_exemplo1.topology)
		relatorio = metrics_report(h)
		assert relatorio.path_count == 1
		assert relatorio.cloud_risk == pytest.approx(7.08, abs=0.005)
		assert relatorio.per_path[0].path_risk == pytest.approx(7.08, abs=0.005)
		assert relatorio.mapl == 6.0
		assert relatorio.roa == pytest.approx(relatorio.cloud_risk)


class TestPathRisk:
	def test_alvo_sem_vulnerabilidades(self):
		"""Caminho direto até um alvo sem vulnerabilidades tem risco zero."""
		h = _grafo([_vm("a", internet=True), _vm("db", vulns=(), alvo=True)], [("a", "db")])
		assert path_risk(AttackPath((ATTACKER_ID, "db")), h.vms) == 0.0

	def test_soma_manual(self):
		"""O risco do caminho soma E × I de cada nó, sem o atacante."""
		a = Vulnerability("CVE-A", 5.0, 0.1, 3.0)
		b = Vulnerability("CVE-B", 5.0, 0.3, 2.0)
		h = _grafo(
			[_vm("x", (a,), internet=True), _vm("y", (b,)), _vm("db", (a, b), alvo=True)],
			[("x", "y"), ("y", "db")],
		)
		caminho = AttackPath((ATTACKER_ID, "x", "y", "db"))
		assert path_risk(caminho, h.vms) == pytest.approx(0.3 + 0.6 + 0.6)

	def test_no_desconhecido(self):
		"""Nó sem VM correspondente levanta UnresolvedNodeError."""
		h = _grafo([_vm("a", internet=True), _vm("db", alvo=True)], [("a", "db")])
		with pytest.raises(UnresolvedNodeError):
			path_risk(AttackPath((ATTACKER_ID, "fantasma", "db")), h.vms)


class TestAgregacao:
	def test_caminhos_disjuntos_somam(self):
		"""CR é a soma dos riscos dos caminhos."""
		baixo = Vulnerability("CVE-B", 5.0, 0.1, 2.0)
		h = _grafo(
			[_vm("a", internet=True), _vm("b", (baixo,), internet=True), _vm("db", alvo=True)],
			[("a", "db"), ("b", "db")],
		)
		assert cloud_risk(h) == pytest.approx((1.298 + 1.298) + (0.2 + 1.298))

	def test_mapl_media_dos_comprimentos(self):
		"""MAPL é a média dos comprimentos dos caminhos."""
		h = _grafo(
			[_vm("a", internet=True), _vm("b", internet=True), _vm("c"), _vm("d"), _vm("db", alvo=True)],
			[("a", "db"), ("b", "c"), ("c", "d"), ("d", "db")],
		)
		assert mapl(h) == pytest.approx((2 + 4) / 2)

	def test_sem_caminhos_tudo_zero(self):
		"""Sem caminhos, CR, RoA e MAPL ficam em zero."""
		h = _grafo([_vm("a"), _vm("db", alvo=True)], [("a", "db")])
		relatorio = metrics_report(h)
		assert (relatorio.cloud_risk, relatorio.roa, relatorio.mapl, relatorio.path_count) == (0.0, 0.0, 0.0, 0)

	def test_roa_divide_pelo_custo(self):
		"""RoA divide o risco de cada nó pelo custo de ataque."""
		caro = replace(V5, attack_cost=2.0)
		h = _grafo([_vm("a", (caro,), internet=True), _vm("db", vulns=(), alvo=True)], [("a", "db")])
		assert return_on_attack(h) == pytest.approx(0.649)
		assert cloud_risk(h) == pytest.approx(1.298)

	def test_dobrar_custos_reduz_roa_pela_metade(self, cenario_ep1):
		"""Dobrar todos os custos de ataque reduz o RoA à metade."""
		h = build_harm(cenario_ep1.cloud, cenario_ep1.topology)
		dobrado = {
			vm_id: replace(vm, attack_tree=AttackTree(tuple(replace(v, attack_cost=v.attack_cost * 2) for v in vm.attack_tree.leaves)))
			for vm_id, vm in h.vms.items()
		}
		h2 = replace(h, vms=dobrado)
		assert return_on_attack(h2) == pytest.approx(return_on_attack(h) / 2)

	def test_propaga_explosao(self, cenario_ep1):
		"""A explosão de caminhos chega a quem pede a métrica."""
		h = build_harm(cenario_ep1.cloud, cenario_ep1.topology)
		with pytest.raises(PathExplosionError):
			cloud_risk(h, PathLimits(max_paths=3))


class TestCenarioEp1:
	def test_linha_de_base(self, cenario_ep1):
		"""Linha de base do EP1: 10 caminhos, CR 63.248 e MAPL 5.2."""
		h = build_harm(cenario_ep1.cloud, cenario_ep1.topology)
		relatorio = metrics_report(h)
		assert relatorio.path_count == 10
		assert relatorio.cloud_risk == pytest.approx(63.248, abs=1e-9)
		assert relatorio.roa == pytest.approx(63.248, abs=1e-9)
		assert relatorio.mapl == pytest.approx(5.2)
		assert relatorio.cloud_risk == pytest.approx(sum(p.path_risk for p in relatorio.per_path))
		assert relatorio.cloud_risk >= max(p.path_risk for p in relatorio.per_path)
		assert relatorio.mapl <= PathLimits().max_depth

	def test_sem_coresidencia_menos_caminhos(self, cenario_ep1):
		"""Desligar a co-residência nunca aumenta caminhos nem CR."""
		com = metrics_report(build_harm(cenario_ep1.cloud, cenario_ep1.topology))
		sem = metrics_report(build_harm(cenario_ep1.cloud, cenario_ep1.topology, derive_coresidency=False))
		assert sem.path_count <= com.path_count
		assert sem.cloud_risk <= com.cloud_risk


class TestExportacao:
	def test_salvar_json_e_csv(self, tmp_path, cenario_exemplo1):
		"""metricas.json e metricas.csv saem com três casas decimais."""
		relatorio = metrics_report(build_harm(cenario_exemplo1.cloud, cenario_exemplo1.topology))
		caminho_json, caminho_csv = relatorio.salvar(tmp_path)

		dados = json.loads(caminho_json.read_text(encoding="utf-8"))
		assert dados["cr"] == 7.08
		assert dados["mapl"] == 6.0
		assert dados["path_count"] == 1
		assert dados["per_path"][0]["path"][0] == ATTACKER_ID

		df = pd.read_csv(caminho_csv)
		assert list(df.columns) == ["cr", "roa", "mapl", "path_count"]
		assert caminho_csv.read_text(encoding="utf-8").splitlines()[1] == "7.080,7.080,6.000,1"

	def test_salvar_duas_vezes_e_identico(self, tmp_path, cenario_ep1):
		"""Gravar duas vezes produz arquivos idênticos byte a byte."""
		h = build_harm(cenario_ep1.cloud, cenario_ep1.topology)
		a = metrics_report(h).salvar(tmp_path / "a")
		b = metrics_report(h).salvar(tmp_path / "b")
		for x, y in zip(a, b):
			assert x.read_bytes() == y.read_bytes()
