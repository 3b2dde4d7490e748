"""Importação de relatórios Nessus v2 (.nessus) para o arquivo de cenário."""

from __future__ import annotations

import copy
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable

from bs4 import BeautifulSoup, Tag

from src.harm.cenario import ScenarioError
from src.harm.modelo import InvalidVulnerabilityError
from src.logger import setup_logging

from .pontuacao import subscores_cvss3

logger = setup_logging("scanners.nessus")

_SEM_SOLUCAO = {"", "n/a", "none", "no solution"}


@dataclass(frozen=True, slots=True)
class AchadoVarredura:
	host: str
	cve_id: str
	base_score: float
	exploitability: float
	impact: float
	patchable: bool
	host_ip: str | None = None
	hostname: str | None = None
	plugin_name: str | None = None

	@property
	def identificadores(self) -> set[str]:
		return {valor for valor in (self.host, self.host_ip, self.hostname) if valor}

	def para_vulnerabilidade(self) -> dict[str, Any]:
		return {
			"cve_id": self.cve_id,
			"base_score": self.base_score,
			"exploitability": self.exploitability,
			"impact": self.impact,
			"attack_cost": 1.0,
			"patchable": self.patchable,
		}


def _texto(tag: Tag | None) -> str:
	return tag.get_text(strip=True) if tag is not None else ""


def _propriedade(host: Tag, nome: str) -> str | None:
	props = host.find("hostproperties")
	if props is None:
		return None
	for tag in props.find_all("tag"):
		if tag.get("name") == nome:
			return tag.get_text(strip=True) or None
	return None


def _corrigivel(item: Tag) -> bool:
	if _texto(item.find("patch_publication_date")):
		return True
	return _texto(item.find("solution")).lower() not in _SEM_SOLUCAO


def parse_nessus(xml: str, *, arquivo: Path | str | None = None) -> list[AchadoVarredura]:
	"""Um achado por (host, CVE) para cada ReportItem com vetor CVSS v3."""
	soup = BeautifulSoup(xml, "html.parser")
	if soup.find("nessusclientdata_v2") is None:
		raise ScenarioError("arquivo não é um relatório Nessus v2 (NessusClientData_v2 ausente)", arquivo=arquivo)

	achados: list[AchadoVarredura] = []
	for host in soup.find_all("reporthost"):
		nome = (host.get("name") or "").strip()
		if not nome:
			logger.warning("ReportHost sem atributo name ignorado")
			continue
		host_ip = _propriedade(host, "host-ip")
		hostname = _propriedade(host, "host-fqdn") or _propriedade(host, "hostname")
		vistos: set[str] = set()
		for item in host.find_all("reportitem"):
			cves = [_texto(cve) for cve in item.find_all("cve") if _texto(cve)]
			if not cves:
				continue
			plugin = item.get("pluginname")
			vetor = _texto(item.find("cvss3_vector"))
			if not vetor:
				logger.warning(f"{nome}: {plugin or 'item'} sem vetor CVSS v3 ignorado ({', '.join(cves)})")
				continue
			try:
				base, expl, imp = subscores_cvss3(vetor)
			except InvalidVulnerabilityError as exc:
				logger.warning(f"{nome}: {exc}")
				continue
			informado = _texto(item.find("cvss3_base_score"))
			if informado:
				try:
					base = float(informado)
				except ValueError:
					logger.warning(f"{nome}: cvss3_base_score ilegível {informado!r}; usando o calculado")
			for cve in cves:
				if cve in vistos:
					continue
				vistos.add(cve)
				achados.append(AchadoVarredura(
					host=nome,
					cve_id=cve,
					base_score=base,
					exploitability=expl,
					impact=imp,
					patchable=_corrigivel(item),
					host_ip=host_ip,
					hostname=hostname,
					plugin_name=plugin,
				))
	logger.info(f"{len(achados)} achados lidos do relatório Nessus")
	return achados


def carregar_nessus(caminho: Path | str) -> list[AchadoVarredura]:
	path = Path(caminho)
	try:
		texto = path.read_text(encoding="utf-8")
	except (OSError, UnicodeDecodeError) as exc:
		raise ScenarioError(f"não foi possível ler o relatório: {exc}", arquivo=path) from exc
	return parse_nessus(texto, arquivo=path)


def _chaves_vm(vm: dict[str, Any], campo_id: str) -> set[str]:
	return {str(vm[c]) for c in (campo_id, "display_name", "address") if vm.get(c)}


def mesclar_achados(cenario: dict[str, Any], achados: Iterable[AchadoVarredura]) -> tuple[dict[str, Any], list[str]]:
	"""Acrescenta ao cenário as vulnerabilidades encontradas (por address, vm_id ou display_name).

	CVEs já presentes na VM ficam como estão. Devolve o novo dicionário e os hosts sem VM correspondente.
	"""
	resultado = copy.deepcopy(cenario)
	nos: list[tuple[dict[str, Any], set[str]]] = [(vm, _chaves_vm(vm, "vm_id")) for vm in resultado.get("vms", [])]
	alvo = resultado.get("target")
	if isinstance(alvo, dict):
		nos.append((alvo, _chaves_vm(alvo, "id")))

	nao_casados: list[str] = []
	acrescentados = 0
	for achado in achados:
		destino = next((vm for vm, chaves in nos if chaves & achado.identificadores), None)
		if destino is None:
			if achado.host not in nao_casados:
				nao_casados.append(achado.host)
			continue
		vulns = destino.setdefault("vulnerabilities", [])
		if any(v.get("cve_id") == achado.cve_id for v in vulns):
			continue
		vulns.append(achado.para_vulnerabilidade())
		acrescentados += 1

	if nao_casados:
		logger.warning(f"Hosts da varredura sem VM no cenário: {', '.join(nao_casados)}")
	logger.info(f"{acrescentados} vulnerabilidades acrescentadas ao cenário")
	return resultado, nao_casados
