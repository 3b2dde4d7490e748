"""Simulador do provedor de nuvem: hosts, alocação das VMs e execução de ações.

`CloudState` é um instantâneo imutável. `apply_migration` e `apply_patch` devolvem um
novo estado e deixam o anterior intacto, o que permite avaliar alternativas sem desfazer nada.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from types import MappingProxyType
from typing import Any, Iterable, Mapping

from src.harm.modelo import DuplicateVmError, MissingTargetError, VmNode
from src.logger import setup_logging

logger = setup_logging("nuvem")

__all__ = [
	"CapacityExceededError",
	"CloudError",
	"CloudState",
	"Host",
	"NoOpMigrationError",
	"NotPatchableError",
	"UnknownHostError",
	"UnknownVmError",
	"UnknownVulnerabilityError",
	"apply_migration",
	"apply_patch",
]


class CloudError(ValueError):
	"""Ação inválida sobre o estado da nuvem."""


class CapacityExceededError(CloudError):
	"""Host de destino sem capacidade livre."""


class UnknownVmError(CloudError, LookupError):
	"""VM inexistente."""


class UnknownHostError(CloudError, LookupError):
	"""Host inexistente."""


class NoOpMigrationError(CloudError):
	"""Destino igual ao host atual."""


class UnknownVulnerabilityError(CloudError, LookupError):
	"""A VM não possui a vulnerabilidade indicada."""


class NotPatchableError(CloudError):
	"""Vulnerabilidade marcada como não corrigível."""


@dataclass(frozen=True, slots=True)
class Host:
	host_id: str
	capacity: int

	def __post_init__(self) -> None:
		if not isinstance(self.host_id, str) or not self.host_id.strip():
			raise CloudError("host_id não pode ser vazio")
		if isinstance(self.capacity, bool) or not isinstance(self.capacity, int) or self.capacity < 0:
			raise CloudError(f"{self.host_id}: capacity precisa ser inteiro >= 0 (recebido {self.capacity!r})")


@dataclass(frozen=True)
class CloudState:
	hosts: tuple[Host, ...]
	vms: Mapping[str, VmNode]
	target_id: str

	def __post_init__(self) -> None:
		hosts = tuple(self.hosts)
		object.__setattr__(self, "hosts", hosts)
		object.__setattr__(self, "vms", MappingProxyType(dict(self.vms)))

		ids = [h.host_id for h in hosts]
		repetidos = sorted(h for h, n in Counter(ids).items() if n > 1)
		if repetidos:
			raise CloudError(f"hosts repetidos: {', '.join(repetidos)}")

		for vm_id, vm in self.vms.items():
			if vm_id != vm.vm_id:
				raise CloudError(f"chave {vm_id!r} não corresponde ao vm_id {vm.vm_id!r}")
			if vm.host_id not in ids:
				raise UnknownHostError(f"{vm_id}: host inexistente {vm.host_id!r}")

		ocupacao = Counter(vm.host_id for vm in self.vms.values())
		for host in hosts:
			if ocupacao[host.host_id] > host.capacity:
				raise CapacityExceededError(
					f"{host.host_id}: {ocupacao[host.host_id]} VMs excedem a capacidade {host.capacity}"
				)

		alvos = [vm.vm_id for vm in self.vms.values() if vm.is_target]
		if self.target_id not in self.vms or alvos != [self.target_id]:
			raise MissingTargetError(f"o estado precisa de exatamente um alvo {self.target_id!r} (encontrados: {alvos})")

	@classmethod
	def criar(cls, hosts: Iterable[Host], vms: Iterable[VmNode], target_id: str) -> "CloudState":
		"""Monta o estado a partir de listas, rejeitando vm_id duplicado."""
		mapa: dict[str, VmNode] = {}
		for vm in vms:
			if vm.vm_id in mapa:
				raise DuplicateVmError(f"vm_id duplicado: {vm.vm_id}")
			mapa[vm.vm_id] = vm
		return cls(hosts=tuple(hosts), vms=mapa, target_id=target_id)

	@property
	def placement(self) -> Mapping[str, str]:
		return MappingProxyType({vm_id: vm.host_id for vm_id, vm in self.vms.items()})

	@property
	def host_ids(self) -> tuple[str, ...]:
		return tuple(h.host_id for h in self.hosts)

	def host(self, host_id: str) -> Host:
		for host in self.hosts:
			if host.host_id == host_id:
				return host
		raise UnknownHostError(f"host inexistente: {host_id!r}")

	def vm(self, vm_id: str) -> VmNode:
		try:
			return self.vms[vm_id]
		except KeyError:
			raise UnknownVmError(f"VM inexistente: {vm_id!r}") from None

	def occupancy(self, host_id: str) -> int:
		return sum(1 for vm in self.vms.values() if vm.host_id == host_id)

	def free_slots(self, host_id: str) -> int:
		return self.host(host_id).capacity - self.occupancy(host_id)

	def para_dict(self) -> dict[str, Any]:
		"""Dump do estado no mesmo formato do arquivo de cenário (sem as arestas)."""
		alvo = self.vms[self.target_id]
		return {
			"hosts": [{"id": h.host_id, "capacity": h.capacity} for h in self.hosts],
			"vms": [_vm_para_dict(vm) for vm_id, vm in sorted(self.vms.items()) if not vm.is_target],
			"target": {
				"id": alvo.vm_id,
				"host_id": alvo.host_id,
				"tenant": alvo.tenant,
				"display_name": alvo.display_name,
				"os_label": alvo.os_label,
				"vulnerabilities": [_vuln_para_dict(v) for v in alvo.attack_tree.leaves],
			},
		}


def _vuln_para_dict(vuln) -> dict[str, Any]:
	return {
		"cve_id": vuln.cve_id,
		"base_score": vuln.base_score,
		"exploitability": vuln.exploitability,
		"impact": vuln.impact,
		"attack_cost": vuln.attack_cost,
		"patchable": vuln.patchable,
	}


def _vm_para_dict(vm: VmNode) -> dict[str, Any]:
	return {
		"vm_id": vm.vm_id,
		"display_name": vm.display_name,
		"os_label": vm.os_label,
		"tenant": vm.tenant,
		"host_id": vm.host_id,
		"internet_facing": vm.internet_facing,
		"vulnerabilities": [_vuln_para_dict(v) for v in vm.attack_tree.leaves],
	}


def apply_migration(state: CloudState, vm_id: str, dest_host: str) -> CloudState:
	"""Move a VM para `dest_host` e devolve o novo estado."""
	vm = state.vm(vm_id)
	destino = state.host(dest_host)
	if vm.host_id == destino.host_id:
		raise NoOpMigrationError(f"{vm_id} já está em {dest_host}")
	if state.occupancy(destino.host_id) + 1 > destino.capacity:
		raise CapacityExceededError(f"{dest_host} sem capacidade para {vm_id} (capacidade {destino.capacity})")

	vms = dict(state.vms)
	vms[vm_id] = replace(vm, host_id=destino.host_id)
	logger.debug(f"Migração: {vm_id} {vm.host_id} -> {dest_host}")
	return CloudState(hosts=state.hosts, vms=vms, target_id=state.target_id)


def apply_patch(state: CloudState, vm_id: str, cve_id: str) -> CloudState:
	"""Remove a vulnerabilidade `cve_id` da árvore de ataque da VM."""
	vm = state.vm(vm_id)
	vuln = vm.attack_tree.get(cve_id)
	if vuln is None:
		raise UnknownVulnerabilityError(f"{vm_id} não possui {cve_id}")
	if not vuln.patchable:
		raise NotPatchableError(f"{cve_id} em {vm_id} não é corrigível")

	vms = dict(state.vms)
	vms[vm_id] = replace(vm, attack_tree=vm.attack_tree.without(cve_id))
	logger.debug(f"Correção: {cve_id} removida de {vm_id}")
	return CloudState(hosts=state.hosts, vms=vms, target_id=state.target_id)
