"""Testes do simulador de nuvem: migração, correção e invariantes de capacidade."""

from __future__ import annotations

import pytest

from src.harm import AttackTree, Provenance, TopologyDecl, VmNode, Vulnerability, build_harm, vm_risk
from src.nuvem import (
	CapacityExceededError,
	CloudError,
	CloudState,
	Host,
	NoOpMigrationError,
	NotPatchableError,
	UnknownHostError,
	UnknownVmError,
	UnknownVulnerabilityError,
	apply_migration,
	apply_patch,
)

V1 = Vulnerability("CVE-2018-8484", 7.8, 0.18, 5.9)
V2 = Vulnerability("CVE-2018-8490", 8.4, 0.17, 6.0)
TRAVADA = Vulnerability("CVE-2017-0001", 5.0, 0.2, 5.0, patchable=False)


def _estado() -> CloudState:
	vms = [
		VmNode("win", "win", "Windows", "EP1", "h1", True, AttackTree((V1, V2))),
		VmNode("intruso", "intruso", "Ubuntu", "EP2", "h1", True, AttackTree((V1,))),
		VmNode("legado", "legado", "Ubuntu", "EP1", "h2", False, AttackTree((TRAVADA,))),
		VmNode("db", "db", "Ubuntu", "EP1", "h3", attack_tree=AttackTree((V1,)), is_target=True),
	]
	return CloudState.criar([Host("h1", 2), Host("h2", 2), Host("h3", 1)], vms, "db")


class TestEstado:
	def test_ocupacao_e_vagas(self):
		"""Ocupação e vagas livres por host."""
		estado = _estado()
		assert estado.occupancy("h1") == 2
		assert estado.free_slots("h2") == 1
		assert estado.free_slots("h3") == 0

	def test_host_inexistente_na_construcao(self):
		"""VM em host desconhecido é rejeitada na construção."""
		vm = VmNode("a", "a", "", "EP1", "hx")
		alvo = VmNode("db", "db", "", "EP1", "h1", is_target=True)
		with pytest.raises(UnknownHostError):
			CloudState.criar([Host("h1", 2)], [vm, alvo], "db")

	def test_capacidade_negativa(self):
		"""Capacidade negativa é rejeitada."""
		with pytest.raises(CloudError):
			Host("h1", -1)

	def test_para_dict_espelha_o_cenario(self):
		"""O dump segue o formato do cenário, com VMs ordenadas."""
		dados = _estado().para_dict()
		assert [vm["vm_id"] for vm in dados["vms"]] == ["intruso", "legado", "win"]
		assert dados["target"]["id"] == "db"
		assert dados["hosts"][0] == {"id": "h1", "capacity": 2}


class TestMigracao:
	def test_migracao_atualiza_ocupacao(self):
		"""A migração move uma vaga de um host para o outro sem alterar o estado original."""
		estado = _estado()
		novo = apply_migration(estado, "win", "h2")
		assert novo.placement["win"] == "h2"
		assert novo.occupancy("h1") == estado.occupancy("h1") - 1
		assert novo.occupancy("h2") == estado.occupancy("h2") + 1
		assert estado.placement["win"] == "h1"

	def test_host_cheio(self):
		"""Migrar para host sem vaga levanta CapacityExceededError."""
		with pytest.raises(CapacityExceededError):
			apply_migration(_estado(), "win", "h3")

	def test_mesmo_host(self):
		"""Migrar para o host atual levanta NoOpMigrationError."""
		with pytest.raises(NoOpMigrationError):
			apply_migration(_estado(), "win", "h1")

	def test_vm_ou_host_desconhecidos(self):
		"""VM ou host desconhecidos são rejeitados."""
		with pytest.raises(UnknownVmError):
			apply_migration(_estado(), "nada", "h2")
		with pytest.raises(UnknownHostError):
			apply_migration(_estado(), "win", "h9")

	def test_migracao_quebra_coresidencia(self):
		"""Tirar a VM do host compartilhado remove as arestas de co-residência."""
		estado = _estado()
		topo = TopologyDecl((("win", "db"),), "db")
		antes = build_harm(estado, topo).edges_by_provenance(Provenance.CO_RESIDENCY)
		assert ("intruso", "win") in antes
		depois = build_harm(apply_migration(estado, "win", "h2"), topo)
		assert depois.edges_by_provenance(Provenance.CO_RESIDENCY) == frozenset()

	def test_migracao_preserva_arvores_e_total_de_vms(self):
		"""A migração não mexe nas árvores de ataque nem no total de VMs."""
		estado = _estado()
		novo = apply_migration(estado, "win", "h2")
		assert len(novo.vms) == len(estado.vms)
		assert all(novo.vms[v].attack_tree == estado.vms[v].attack_tree for v in estado.vms)


class TestCorrecao:
	def test_corrigir_folha_efetiva(self):
		"""Corrigir a folha efetiva deixa a próxima folha como vencedora."""
		novo = apply_patch(_estado(), "win", "CVE-2018-8484")
		assert vm_risk(novo.vm("win")) == pytest.approx(1.02)
		assert novo.placement == _estado().placement

	def test_corrigir_unica_vulnerabilidade(self):
		"""Corrigir a única folha zera o risco da VM."""
		novo = apply_patch(_estado(), "intruso", "CVE-2018-8484")
		assert vm_risk(novo.vm("intruso")) == 0.0
		assert not novo.vm("intruso").attack_tree.exploitable

	def test_nao_corrigivel(self):
		"""Vulnerabilidade sem correção levanta NotPatchableError."""
		with pytest.raises(NotPatchableError):
			apply_patch(_estado(), "legado", "CVE-2017-0001")

	def test_vulnerabilidade_ausente(self):
		"""CVE fora da árvore levanta UnknownVulnerabilityError."""
		with pytest.raises(UnknownVulnerabilityError):
			apply_patch(_estado(), "win", "CVE-1999-0000")

	def test_alvo_pode_ser_corrigido(self):
		"""O alvo também pode ser corrigido."""
		novo = apply_patch(_estado(), "db", "CVE-2018-8484")
		assert novo.vm("db").is_target
		assert vm_risk(novo.vm("db")) == 0.0
