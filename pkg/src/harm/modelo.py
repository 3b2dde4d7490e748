"""Tipos do HARM de duas camadas e construção do modelo.

Camada superior: grafo de alcançabilidade (atacante → VMs → alvo). Camada inferior:
uma árvore de ataque por VM, com uma única porta OR sobre as vulnerabilidades.
Todos os tipos são imutáveis depois de construídos.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from enum import StrEnum
from functools import cached_property
from types import MappingProxyType
from typing import TYPE_CHECKING, Iterable, Mapping

import networkx as nx

from src.logger import setup_logging

if TYPE_CHECKING:
	from src.nuvem import CloudState

logger = setup_logging("harm.modelo")

ATTACKER_ID = "attacker"
GATE_OR = "OR"
DEFAULT_MAX_DEPTH = 12
DEFAULT_MAX_PATHS = 100_000


class HarmError(ValueError):
	"""Erro de construção ou consistência do HARM."""


class InvalidVulnerabilityError(HarmError):
	"""Métricas de vulnerabilidade fora da faixa permitida."""


class DanglingReferenceError(HarmError):
	"""Aresta declarada aponta para uma VM inexistente."""


class MissingTargetError(HarmError):
	"""O alvo declarado não existe no estado da nuvem."""


class DuplicateVmError(HarmError):
	"""Dois nós com o mesmo vm_id."""


class InvalidEdgeError(HarmError):
	"""Aresta proibida: laço, entrada no atacante ou saída do alvo."""


class PathExplosionError(RuntimeError):
	"""A enumeração excederia o limite de caminhos; o cenário precisa de limites mais apertados."""

	def __init__(self, max_paths: int, max_depth: int):
		super().__init__(
			f"mais de {max_paths} caminhos de ataque (max_depth={max_depth}); "
			"ajuste --max-paths/--max-depth"
		)
		self.max_paths = max_paths
		self.max_depth = max_depth


def _numero_finito(valor: float, nome: str, cve_id: str) -> float:
	if isinstance(valor, bool) or not isinstance(valor, (int, float)) or not math.isfinite(valor):
		raise InvalidVulnerabilityError(f"{cve_id}: {nome} precisa ser um número finito (recebido {valor!r})")
	return float(valor)


@dataclass(frozen=True, slots=True)
class Vulnerability:
	cve_id: str
	base_score: float
	exploitability: float
	impact: float
	attack_cost: float = 1.0
	patchable: bool = True

	def __post_init__(self) -> None:
		if not isinstance(self.cve_id, str) or not self.cve_id.strip():
			raise InvalidVulnerabilityError("cve_id não pode ser vazio")
		base = _numero_finito(self.base_score, "base_score", self.cve_id)
		expl = _numero_finito(self.exploitability, "exploitability", self.cve_id)
		imp = _numero_finito(self.impact, "impact", self.cve_id)
		custo = _numero_finito(self.attack_cost, "attack_cost", self.cve_id)
		if not 0.0 <= base <= 10.0:
			raise InvalidVulnerabilityError(f"{self.cve_id}: base_score fora de [0, 10]: {base}")
		if expl < 0.0:
			raise InvalidVulnerabilityError(f"{self.cve_id}: exploitability negativa: {expl}")
		if not 0.0 <= imp <= 10.0:
			raise InvalidVulnerabilityError(f"{self.cve_id}: impact fora de [0, 10]: {imp}")
		if custo <= 0.0:
			raise InvalidVulnerabilityError(f"{self.cve_id}: attack_cost precisa ser > 0: {custo}")
		object.__setattr__(self, "base_score", base)
		object.__setattr__(self, "exploitability", expl)
		object.__setattr__(self, "impact", imp)
		object.__setattr__(self, "attack_cost", custo)
		object.__setattr__(self, "patchable", bool(self.patchable))

	def severity(self) -> float:
		"""R = E × I."""
		return self.exploitability * self.impact


@dataclass(frozen=True, slots=True)
class AttackTree:
	"""Árvore de ataque de um nível: porta OR sobre as folhas."""

	leaves: tuple[Vulnerability, ...] = ()
	gate: str = GATE_OR

	def __post_init__(self) -> None:
		folhas = tuple(self.leaves)
		if self.gate != GATE_OR:
			raise HarmError(f"porta não suportada: {self.gate!r} (apenas {GATE_OR})")
		vistos: set[str] = set()
		for folha in folhas:
			if folha.cve_id in vistos:
				raise HarmError(f"vulnerabilidade repetida na mesma árvore: {folha.cve_id}")
			vistos.add(folha.cve_id)
		object.__setattr__(self, "leaves", folhas)

	@property
	def exploitable(self) -> bool:
		return bool(self.leaves)

	def effective_vulnerability(self) -> Vulnerability | None:
		"""Folha vencedora da porta OR: maior severidade, empate pelo menor cve_id."""
		if not self.leaves:
			return None
		return min(self.leaves, key=lambda v: (-v.severity(), v.cve_id))

	def severity(self) -> float:
		efetiva = self.effective_vulnerability()
		return efetiva.severity() if efetiva is not None else 0.0

	def get(self, cve_id: str) -> Vulnerability | None:
		return next((folha for folha in self.leaves if folha.cve_id == cve_id), None)

	def without(self, cve_id: str) -> "AttackTree":
		return AttackTree(tuple(folha for folha in self.leaves if folha.cve_id != cve_id), self.gate)

	def with_leaf(self, vuln: Vulnerability) -> "AttackTree":
		return AttackTree((*self.leaves, vuln), self.gate)


@dataclass(frozen=True, slots=True)
class VmNode:
	vm_id: str
	display_name: str
	os_label: str
	tenant: str
	host_id: str
	internet_facing: bool = False
	attack_tree: AttackTree = field(default_factory=AttackTree)
	is_target: bool = False

	def __post_init__(self) -> None:
		if not isinstance(self.vm_id, str) or not self.vm_id.strip():
			raise HarmError("vm_id não pode ser vazio")
		if self.vm_id == ATTACKER_ID:
			raise HarmError(f"vm_id reservado para o nó atacante: {ATTACKER_ID!r}")
		if not self.host_id:
			raise HarmError(f"{self.vm_id}: host_id não pode ser vazio")
		if self.is_target and self.internet_facing:
			raise HarmError(f"{self.vm_id}: o alvo não pode ser exposto à internet")


def vm_risk(vm: VmNode) -> float:
	"""Risco de explorar a VM: severidade da vulnerabilidade efetiva (0 se não houver)."""
	return vm.attack_tree.severity()


class Provenance(StrEnum):
	DECLARED = "declared"
	INTERNET_ENTRY = "internet_entry"
	CO_RESIDENCY = "co_residency"


@dataclass(frozen=True, slots=True, order=True)
class Edge:
	origem: str
	destino: str
	provenance: Provenance


@dataclass(frozen=True, slots=True)
class PathLimits:
	max_depth: int = DEFAULT_MAX_DEPTH
	max_paths: int = DEFAULT_MAX_PATHS

	def __post_init__(self) -> None:
		if self.max_depth < 1:
			raise ValueError("max_depth precisa ser >= 1")
		if self.max_paths < 1:
			raise ValueError("max_paths precisa ser >= 1")


@dataclass(frozen=True, slots=True)
class TopologyDecl:
	"""Arestas declaradas pela rede virtual do locatário e o identificador do alvo."""

	edges: tuple[tuple[str, str], ...]
	target_id: str

	def __post_init__(self) -> None:
		object.__setattr__(self, "edges", tuple((str(a), str(b)) for a, b in self.edges))


@dataclass(frozen=True, slots=True, order=True)
class AttackPath:
	node_sequence: tuple[str, ...]

	def length(self) -> int:
		"""Nós explorados, incluindo o alvo e excluindo o atacante."""
		return len(self.node_sequence) - 1

	def validate(self, h: "HarmGraph") -> None:
		nos = self.node_sequence
		if len(nos) < 2 or nos[0] != ATTACKER_ID or nos[-1] != h.target_id:
			raise HarmError(f"caminho precisa ir de {ATTACKER_ID} até {h.target_id}: {nos}")
		if len(set(nos)) != len(nos):
			raise HarmError(f"caminho com nó repetido: {nos}")
		pares = h.edge_pairs
		for origem, destino in zip(nos, nos[1:]):
			if (origem, destino) not in pares:
				raise HarmError(f"aresta inexistente no caminho: {origem} -> {destino}")


@dataclass(frozen=True)
class HarmGraph:
	target_id: str
	vms: Mapping[str, VmNode]
	edges: frozenset[Edge]

	def __post_init__(self) -> None:
		object.__setattr__(self, "vms", MappingProxyType(dict(self.vms)))
		object.__setattr__(self, "edges", frozenset(self.edges))
		alvo = self.vms.get(self.target_id)
		if alvo is None or not alvo.is_target:
			raise MissingTargetError(f"alvo inexistente no grafo: {self.target_id!r}")
		for aresta in self.edges:
			if aresta.origem == aresta.destino:
				raise InvalidEdgeError(f"laço em {aresta.origem}")
			if aresta.destino == ATTACKER_ID:
				raise InvalidEdgeError(f"aresta entrando no atacante: {aresta.origem}")
			if aresta.origem == self.target_id:
				raise InvalidEdgeError(f"aresta saindo do alvo: {aresta.destino}")
			for no in (aresta.origem, aresta.destino):
				if no != ATTACKER_ID and no not in self.vms:
					raise DanglingReferenceError(f"nó desconhecido na aresta: {no}")

	@property
	def nodes(self) -> frozenset[str]:
		return frozenset({ATTACKER_ID, *self.vms})

	@cached_property
	def edge_pairs(self) -> frozenset[tuple[str, str]]:
		return frozenset((a.origem, a.destino) for a in self.edges)

	def edges_by_provenance(self, provenance: Provenance) -> frozenset[tuple[str, str]]:
		return frozenset((a.origem, a.destino) for a in self.edges if a.provenance == provenance)

	@cached_property
	def digraph(self) -> nx.DiGraph:
		"""Camada superior como `nx.DiGraph` (arestas deduplicadas por par)."""
		grafo = nx.DiGraph()
		grafo.add_node(ATTACKER_ID)
		grafo.add_nodes_from(sorted(self.vms))
		grafo.add_edges_from(sorted(self.edge_pairs))
		return grafo

	def resumo(self) -> dict[str, int]:
		contagem = {prov.value: len(self.edges_by_provenance(prov)) for prov in Provenance}
		contagem["vms"] = len(self.vms)
		return contagem


def build_harm(cloud: "CloudState", topology: TopologyDecl, derive_coresidency: bool = True) -> HarmGraph:
	"""Monta o HARM a partir do estado da nuvem e da topologia declarada.

	Arestas declaradas são copiadas; arestas de entrada pela internet saem do atacante
	para cada VM exposta; arestas de co-residência ligam VMs de locatários diferentes
	no mesmo host (nos dois sentidos, exceto saindo do alvo).
	"""
	vms = cloud.vms
	alvo_id = topology.target_id
	if alvo_id not in vms or not vms[alvo_id].is_target:
		raise MissingTargetError(f"alvo {alvo_id!r} não existe no estado da nuvem")
	if cloud.target_id != alvo_id:
		raise MissingTargetError(f"topologia aponta para {alvo_id!r}, mas o alvo da nuvem é {cloud.target_id!r}")

	arestas: set[Edge] = set()
	for origem, destino in topology.edges:
		if ATTACKER_ID in (origem, destino):
			raise InvalidEdgeError(f"arestas do atacante são derivadas, não declaradas: {origem} -> {destino}")
		for no in (origem, destino):
			if no not in vms:
				raise DanglingReferenceError(f"aresta {origem} -> {destino} referencia VM inexistente: {no}")
		if origem == destino:
			raise InvalidEdgeError(f"laço declarado em {origem}")
		if origem == alvo_id:
			raise InvalidEdgeError(f"o alvo não pode ter arestas de saída: {origem} -> {destino}")
		arestas.add(Edge(origem, destino, Provenance.DECLARED))

	for vm in vms.values():
		if vm.internet_facing and not vm.is_target:
			arestas.add(Edge(ATTACKER_ID, vm.vm_id, Provenance.INTERNET_ENTRY))

	if derive_coresidency:
		arestas.update(_arestas_coresidencia(vms.values()))

	grafo = HarmGraph(target_id=alvo_id, vms=vms, edges=frozenset(arestas))
	logger.debug(f"HARM montado: {grafo.resumo()}")
	return grafo


def _arestas_coresidencia(vms: Iterable[VmNode]) -> set[Edge]:
	por_host: dict[str, list[VmNode]] = defaultdict(list)
	for vm in vms:
		por_host[vm.host_id].append(vm)
	arestas: set[Edge] = set()
	for vizinhos in por_host.values():
		for origem in vizinhos:
			if origem.is_target:
				continue
			for destino in vizinhos:
				if destino.vm_id != origem.vm_id and destino.tenant != origem.tenant:
					arestas.add(Edge(origem.vm_id, destino.vm_id, Provenance.CO_RESIDENCY))
	return arestas


def enumerate_attack_paths(h: HarmGraph, limits: PathLimits = PathLimits()) -> list[AttackPath]:
	"""Todos os caminhos simples atacante → alvo, em ordem lexicográfica.

	VMs sem vulnerabilidades não são exploráveis e saem da travessia. Se o número de
	caminhos passar de `limits.max_paths`, levanta `PathExplosionError` (nunca trunca).
	"""
	exploraveis = [
		no for no in h.digraph.nodes
		if no in (ATTACKER_ID, h.target_id) or h.vms[no].attack_tree.exploitable
	]
	grafo = h.digraph.subgraph(exploraveis)
	if not nx.has_path(grafo, ATTACKER_ID, h.target_id):
		return []

	caminhos: list[tuple[str, ...]] = []
	for caminho in nx.all_simple_paths(grafo, ATTACKER_ID, h.target_id, cutoff=limits.max_depth):
		caminhos.append(tuple(caminho))
		if len(caminhos) > limits.max_paths:
			raise PathExplosionError(limits.max_paths, limits.max_depth)
	caminhos.sort()
	return [AttackPath(caminho) for caminho in caminhos]
