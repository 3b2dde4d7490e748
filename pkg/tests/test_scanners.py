"""Testes da importação de varreduras Nessus e do cálculo dos subescores CVSS v3."""

from __future__ import annotations

import pytest

from src.harm.cenario import ScenarioError, cenario_de_dict
from src.harm.modelo import InvalidVulnerabilityError
from src.scanners import carregar_nessus, mesclar_achados, parse_nessus, subscores_cvss3

from tests.conftest import EP1_PATH, NESSUS_PATH, ler_json


class TestSubscores:
	@pytest.mark.parametrize(
		"vetor, esperado",
		[
			("CVSS:3.0/AV:N/AC:H/PR:N/UI:N/S:U/C:H/I:H/A:H", (8.1, 0.22, 5.9)),
			("CVSS:3.0/AV:L/AC:L/PR:L/UI:N/S:U/C:H/I:H/A:H", (7.8, 0.18, 5.9)),
			("CVSS:3.0/AV:N/AC:L/PR:N/UI:N/S:U/C:H/I:H/A:H", (9.8, 0.39, 5.9)),
		],
	)
	def test_vetores_conhecidos(self, vetor, esperado):
		"""Vetores conhecidos dão base, exploração/10 e impacto esperados."""
		assert subscores_cvss3(vetor) == pytest.approx(esperado)

	def test_impacto_parcial(self):
		"""Impacto parcial arredonda para 4.7."""
		_, expl, imp = subscores_cvss3("CVSS:3.0/AV:N/AC:H/PR:N/UI:N/S:U/C:L/I:L/A:H")
		assert (expl, imp) == pytest.approx((0.22, 4.7))

	def test_vetor_invalido(self):
		"""Vetor incompleto levanta InvalidVulnerabilityError."""
		with pytest.raises(InvalidVulnerabilityError):
			subscores_cvss3("CVSS:3.0/AV:X")


class TestParseNessus:
	def test_achados_da_fixture(self):
		"""A varredura de exemplo gera um achado por CVE, com host, escores e correção."""
		achados = carregar_nessus(NESSUS_PATH)
		assert [(a.host, a.cve_id) for a in achados] == [
			("10.1.0.10", "CVE-2018-8484"),
			("10.1.0.10", "CVE-2019-0708"),
			("srv-interno", "CVE-2018-18955"),
			("192.168.50.5", "CVE-2018-0101"),
		]
		por_cve = {a.cve_id: a for a in achados}
		assert (por_cve["CVE-2019-0708"].base_score, por_cve["CVE-2019-0708"].exploitability) == (9.8, 0.39)
		assert por_cve["CVE-2018-18955"].patchable
		assert por_cve["CVE-2018-18955"].host_ip == "10.1.1.17"
		assert por_cve["CVE-2018-18955"].hostname == "srv-interno.ep1.local"
		assert not por_cve["CVE-2018-0101"].patchable
		assert por_cve["CVE-2018-8484"].plugin_name.startswith("KB4462917")

	def test_sem_raiz_nessus(self):
		"""XML sem NessusClientData_v2 é rejeitado."""
		with pytest.raises(ScenarioError):
			parse_nessus("<relatorio><host/></relatorio>")

	def test_arquivo_inexistente(self, tmp_path):
		"""Arquivo de varredura ausente vira ScenarioError."""
		with pytest.raises(ScenarioError):
			carregar_nessus(tmp_path / "nada.nessus")


class TestMesclagem:
	def test_mescla_no_cenario_ep1(self):
		"""Achados entram nas VMs certas, sem repetir CVE e sem alterar o original."""
		original = ler_json(EP1_PATH)
		mesclado, nao_casados = mesclar_achados(original, carregar_nessus(NESSUS_PATH))
		assert nao_casados == ["192.168.50.5"]

		vms = {vm["vm_id"]: vm for vm in mesclado["vms"]}
		assert [v["cve_id"] for v in vms["vm0"]["vulnerabilities"]] == [
			"CVE-2018-8484", "CVE-2018-8490", "CVE-2019-0708",
		]
		assert vms["vm7"]["vulnerabilities"][-1]["cve_id"] == "CVE-2018-18955"
		assert len(original["vms"][0]["vulnerabilities"]) == 2

		cenario = cenario_de_dict(mesclado)
		assert len(cenario.cloud.vm("vm0").attack_tree.leaves) == 3

	def test_sem_achados(self):
		"""Sem achados o cenário sai igual."""
		original = ler_json(EP1_PATH)
		mesclado, nao_casados = mesclar_achados(original, [])
		assert mesclado == original
		assert nao_casados == []
