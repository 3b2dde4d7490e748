"""Leitura e gravação de arquivos de cenário (JSON UTF-8).

Formato: `hosts` (id, capacity), `vms` (vm_id, display_name, os_label, tenant, host_id,
internet_facing, vulnerabilities[], address opcional), `edges` (from, to), `target`
(id, host_id, tenant/vulnerabilities opcionais), `ep_code` e `tenant` opcionais.
Erros de formato viram `ScenarioError` com linha/coluna quando é possível localizá-las.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from src.harm.modelo import (
	AttackTree,
	HarmError,
	TopologyDecl,
	VmNode,
	Vulnerability,
)
from src.logger import setup_logging
from src.nuvem import CloudError, CloudState, Host

logger = setup_logging("harm.cenario")

DEFAULT_ATTACK_COST = 1.0
PROVIDER_TENANT = "provider"


class ScenarioError(HarmError):
	"""Cenário malformado; `linha`/`coluna` apontam para o trecho do arquivo quando conhecidos."""

	def __init__(
		self,
		mensagem: str,
		*,
		arquivo: Path | str | None = None,
		linha: int | None = None,
		coluna: int | None = None,
	):
		super().__init__(mensagem)
		self.mensagem = mensagem
		self.arquivo = str(arquivo) if arquivo is not None else None
		self.linha = linha
		self.coluna = coluna

	def __str__(self) -> str:
		partes = [self.arquivo or "<cenário>"]
		if self.linha is not None:
			partes.append(str(self.linha))
			if self.coluna is not None:
				partes.append(str(self.coluna))
		return f"{':'.join(partes)}: {self.mensagem}"


@dataclass(frozen=True)
class Cenario:
	cloud: CloudState
	topology: TopologyDecl
	ep_code: str | None = None
	tenant: str | None = None
	addresses: tuple[tuple[str, str], ...] = ()

	def para_dict(self) -> dict[str, Any]:
		dados = self.cloud.para_dict()
		enderecos = dict(self.addresses)
		for vm in dados["vms"]:
			if vm["vm_id"] in enderecos:
				vm["address"] = enderecos[vm["vm_id"]]
		dados["edges"] = [{"from": a, "to": b} for a, b in self.topology.edges]
		if self.ep_code is not None:
			dados["ep_code"] = self.ep_code
		if self.tenant is not None:
			dados["tenant"] = self.tenant
		return dados


class _Localizador:
	"""Acha a linha de um par chave/valor no texto original para ancorar mensagens."""

	def __init__(self, texto: str | None):
		self._texto = texto or ""

	def linha(self, chave: str, valor: Any = None) -> int | None:
		if not self._texto:
			return None
		if valor is None:
			padrao = rf'"{re.escape(chave)}"\s*:'
		elif isinstance(valor, str):
			padrao = rf'"{re.escape(chave)}"\s*:\s*"{re.escape(valor)}"'
		else:
			padrao = rf'"{re.escape(chave)}"\s*:\s*{re.escape(json.dumps(valor))}'
		achado = re.search(padrao, self._texto)
		if achado is None:
			return None
		return self._texto.count("\n", 0, achado.start()) + 1


class _Leitor:
	def __init__(self, texto: str | None, arquivo: Path | str | None):
		self.local = _Localizador(texto)
		self.arquivo = arquivo

	def erro(self, mensagem: str, *, linha: int | None = None) -> ScenarioError:
		return ScenarioError(mensagem, arquivo=self.arquivo, linha=linha)

	def campo(self, obj: Any, chave: str, tipo: type | tuple[type, ...], contexto: str, *, ancora: int | None = None) -> Any:
		if not isinstance(obj, dict):
			raise self.erro(f"{contexto}: esperado objeto JSON", linha=ancora)
		if chave not in obj:
			raise self.erro(f"{contexto}: campo obrigatório ausente: {chave!r}", linha=ancora)
		valor = obj[chave]
		if not _tipo_ok(valor, tipo):
			raise self.erro(
				f"{contexto}: campo {chave!r} com tipo inválido ({type(valor).__name__})",
				linha=self.local.linha(chave, valor if isinstance(valor, (str, int, float)) else None) or ancora,
			)
		return valor

	def opcional(self, obj: dict, chave: str, tipo: type | tuple[type, ...], padrao: Any, contexto: str, *, ancora: int | None = None) -> Any:
		if chave not in obj or obj[chave] is None:
			return padrao
		return self.campo(obj, chave, tipo, contexto, ancora=ancora)


def _tipo_ok(valor: Any, tipo: type | tuple[type, ...]) -> bool:
	tipos = tipo if isinstance(tipo, tuple) else (tipo,)
	if isinstance(valor, bool) and bool not in tipos:
		return False
	return isinstance(valor, tipos)


_NUMERO = (int, float)


def _ler_vulnerabilidades(leitor: _Leitor, itens: Any, dono: str, ancora: int | None) -> AttackTree:
	if not isinstance(itens, list):
		raise leitor.erro(f"{dono}: 'vulnerabilities' precisa ser uma lista", linha=ancora)
	folhas: list[Vulnerability] = []
	for idx, item in enumerate(itens):
		contexto = f"{dono}.vulnerabilities[{idx}]"
		cve_id = leitor.campo(item, "cve_id", str, contexto, ancora=ancora)
		linha = leitor.local.linha("cve_id", cve_id) or ancora
		try:
			folhas.append(Vulnerability(
				cve_id=cve_id,
				base_score=leitor.campo(item, "base_score", _NUMERO, contexto, ancora=linha),
				exploitability=leitor.campo(item, "exploitability", _NUMERO, contexto, ancora=linha),
				impact=leitor.campo(item, "impact", _NUMERO, contexto, ancora=linha),
				attack_cost=leitor.opcional(item, "attack_cost", _NUMERO, DEFAULT_ATTACK_COST, contexto, ancora=linha),
				patchable=leitor.opcional(item, "patchable", bool, True, contexto, ancora=linha),
			))
		except ScenarioError:
			raise
		except HarmError as exc:
			raise leitor.erro(f"{contexto}: {exc}", linha=linha) from exc
	try:
		return AttackTree(tuple(folhas))
	except HarmError as exc:
		raise leitor.erro(f"{dono}: {exc}", linha=ancora) from exc


def cenario_de_dict(data: Any, *, texto: str | None = None, arquivo: Path | str | None = None) -> Cenario:
	"""Valida o dicionário carregado do JSON e monta estado da nuvem + topologia."""
	leitor = _Leitor(texto, arquivo)
	if not isinstance(data, dict):
		raise leitor.erro("o cenário precisa ser um objeto JSON", linha=1)

	tenant_cenario = leitor.opcional(data, "tenant", str, None, "cenário")
	ep_code = leitor.opcional(data, "ep_code", str, None, "cenário")

	hosts_raw = leitor.campo(data, "hosts", list, "cenário", ancora=1)
	hosts: list[Host] = []
	for idx, item in enumerate(hosts_raw):
		contexto = f"hosts[{idx}]"
		host_id = leitor.campo(item, "id", str, contexto, ancora=leitor.local.linha("hosts"))
		linha = leitor.local.linha("id", host_id)
		capacidade = leitor.campo(item, "capacity", int, contexto, ancora=linha)
		try:
			hosts.append(Host(host_id=host_id, capacity=capacidade))
		except CloudError as exc:
			raise leitor.erro(f"{contexto}: {exc}", linha=linha) from exc

	vms_raw = leitor.campo(data, "vms", list, "cenário", ancora=1)
	vms: list[VmNode] = []
	enderecos: list[tuple[str, str]] = []
	vistos: set[str] = set()
	for idx, item in enumerate(vms_raw):
		contexto = f"vms[{idx}]"
		vm_id = leitor.campo(item, "vm_id", str, contexto, ancora=leitor.local.linha("vms"))
		linha = leitor.local.linha("vm_id", vm_id)
		if vm_id in vistos:
			raise leitor.erro(f"{contexto}: vm_id duplicado: {vm_id!r}", linha=linha)
		vistos.add(vm_id)
		arvore = _ler_vulnerabilidades(leitor, item.get("vulnerabilities", []), vm_id, linha)
		endereco = leitor.opcional(item, "address", str, None, contexto, ancora=linha)
		if endereco:
			enderecos.append((vm_id, endereco))
		try:
			vms.append(VmNode(
				vm_id=vm_id,
				display_name=leitor.opcional(item, "display_name", str, vm_id, contexto, ancora=linha),
				os_label=leitor.opcional(item, "os_label", str, "", contexto, ancora=linha),
				tenant=leitor.campo(item, "tenant", str, contexto, ancora=linha),
				host_id=leitor.campo(item, "host_id", str, contexto, ancora=linha),
				internet_facing=leitor.opcional(item, "internet_facing", bool, False, contexto, ancora=linha),
				attack_tree=arvore,
			))
		except HarmError as exc:
			if isinstance(exc, ScenarioError):
				raise
			raise leitor.erro(f"{contexto}: {exc}", linha=linha) from exc

	alvo_raw = leitor.campo(data, "target", dict, "cenário", ancora=1)
	linha_alvo = leitor.local.linha("target")
	alvo_id = leitor.campo(alvo_raw, "id", str, "target", ancora=linha_alvo)
	if alvo_id in vistos:
		raise leitor.erro(f"target: id {alvo_id!r} repete o vm_id de uma VM", linha=linha_alvo)
	try:
		vms.append(VmNode(
			vm_id=alvo_id,
			display_name=leitor.opcional(alvo_raw, "display_name", str, alvo_id, "target", ancora=linha_alvo),
			os_label=leitor.opcional(alvo_raw, "os_label", str, "", "target", ancora=linha_alvo),
			tenant=leitor.opcional(alvo_raw, "tenant", str, tenant_cenario or PROVIDER_TENANT, "target", ancora=linha_alvo),
			host_id=leitor.campo(alvo_raw, "host_id", str, "target", ancora=linha_alvo),
			internet_facing=False,
			attack_tree=_ler_vulnerabilidades(leitor, alvo_raw.get("vulnerabilities", []), alvo_id, linha_alvo),
			is_target=True,
		))
	except HarmError as exc:
		if isinstance(exc, ScenarioError):
			raise
		raise leitor.erro(f"target: {exc}", linha=linha_alvo) from exc

	arestas_raw = leitor.opcional(data, "edges", list, [], "cenário", ancora=1)
	arestas: list[tuple[str, str]] = []
	ids_validos = vistos | {alvo_id}
	for idx, item in enumerate(arestas_raw):
		contexto = f"edges[{idx}]"
		ancora = leitor.local.linha("edges")
		origem = leitor.campo(item, "from", str, contexto, ancora=ancora)
		destino = leitor.campo(item, "to", str, contexto, ancora=ancora)
		for no in (origem, destino):
			if no not in ids_validos:
				raise leitor.erro(
					f"{contexto}: aresta {origem} -> {destino} referencia VM inexistente {no!r}",
					linha=leitor.local.linha("from", origem) or ancora,
				)
		if (origem, destino) not in arestas:
			arestas.append((origem, destino))

	try:
		cloud = CloudState.criar(hosts, vms, alvo_id)
	except (CloudError, HarmError) as exc:
		raise leitor.erro(str(exc)) from exc

	return Cenario(
		cloud=cloud,
		topology=TopologyDecl(edges=tuple(arestas), target_id=alvo_id),
		ep_code=ep_code,
		tenant=tenant_cenario,
		addresses=tuple(enderecos),
	)


def parse_cenario(texto: str, *, arquivo: Path | str | None = None) -> Cenario:
	try:
		data = json.loads(texto)
	except json.JSONDecodeError as exc:
		raise ScenarioError(exc.msg, arquivo=arquivo, linha=exc.lineno, coluna=exc.colno) from exc
	return cenario_de_dict(data, texto=texto, arquivo=arquivo)


def carregar_cenario(caminho: Path | str) -> Cenario:
	path = Path(caminho)
	try:
		texto = path.read_text(encoding="utf-8")
	except (OSError, UnicodeDecodeError) as exc:
		raise ScenarioError(f"não foi possível ler o cenário: {exc}", arquivo=path) from exc
	cenario = parse_cenario(texto, arquivo=path)
	logger.info(
		f"Cenário carregado de {path.name}: {len(cenario.cloud.vms)} nós, "
		f"{len(cenario.cloud.hosts)} hosts, {len(cenario.topology.edges)} arestas declaradas"
	)
	return cenario


def salvar_cenario(cenario: Cenario, caminho: Path | str) -> Path:
	path = Path(caminho)
	path.parent.mkdir(parents=True, exist_ok=True)
	path.write_text(json.dumps(cenario.para_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
	return path
