"""Métricas de compreensão da situação sobre um HARM: Cloud Risk, RoA, MAPL e risco por caminho."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import pandas as pd

from src.harm.modelo import (
	ATTACKER_ID,
	AttackPath,
	HarmGraph,
	PathLimits,
	VmNode,
	enumerate_attack_paths,
	vm_risk,
)
from src.logger import setup_logging

logger = setup_logging("metricas")

COLUNAS_CSV = ["cr", "roa", "mapl", "path_count"]


class UnresolvedNodeError(LookupError):
	"""Nó do caminho sem VM correspondente."""


@dataclass(frozen=True, slots=True)
class PathRisk:
	path: AttackPath
	path_risk: float


@dataclass(frozen=True)
class MetricsReport:
	cloud_risk: float = 0.0
	roa: float = 0.0
	mapl: float = 0.0
	path_count: int = 0
	per_path: tuple[PathRisk, ...] = field(default_factory=tuple)

	def para_dict(self, casas: int = 3) -> dict[str, Any]:
		return {
			"cr": round(self.cloud_risk, casas),
			"roa": round(self.roa, casas),
			"mapl": round(self.mapl, casas),
			"path_count": self.path_count,
			"per_path": [
				{"path": list(item.path.node_sequence), "path_risk": round(item.path_risk, casas)}
				for item in self.per_path
			],
		}

	def para_dataframe(self) -> pd.DataFrame:
		return pd.DataFrame(
			[{"cr": self.cloud_risk, "roa": self.roa, "mapl": self.mapl, "path_count": self.path_count}],
			columns=COLUNAS_CSV,
		)

	def salvar(self, out_dir: Path, casas: int = 3) -> tuple[Path, Path]:
		"""Grava `metricas.json` e `metricas.csv` em `out_dir`."""
		out_dir.mkdir(parents=True, exist_ok=True)
		caminho_json = out_dir / "metricas.json"
		caminho_csv = out_dir / "metricas.csv"
		caminho_json.write_text(
			json.dumps(self.para_dict(casas), indent=2, sort_keys=True) + "\n",
			encoding="utf-8",
		)
		self.para_dataframe().to_csv(caminho_csv, index=False, float_format=f"%.{casas}f", lineterminator="\n")
		return caminho_json, caminho_csv


def _no(nome: str, vms: Mapping[str, VmNode]) -> VmNode:
	try:
		return vms[nome]
	except KeyError:
		raise UnresolvedNodeError(f"nó sem VM correspondente: {nome!r}") from None


def _termos(path: AttackPath, vms: Mapping[str, VmNode]) -> list[VmNode]:
	return [_no(nome, vms) for nome in path.node_sequence if nome != ATTACKER_ID]


def path_risk(path: AttackPath, vms: Mapping[str, VmNode]) -> float:
	"""Soma de R(VM) = E × I sobre os nós do caminho, sem o atacante."""
	return sum(vm_risk(vm) for vm in _termos(path, vms))


def _retorno_no(vm: VmNode) -> float:
	efetiva = vm.attack_tree.effective_vulnerability()
	if efetiva is None:
		return 0.0
	return efetiva.severity() / efetiva.attack_cost


def _caminho_roa(path: AttackPath, vms: Mapping[str, VmNode]) -> float:
	return sum(_retorno_no(vm) for vm in _termos(path, vms))


def _mapl(caminhos: list[AttackPath]) -> float:
	if not caminhos:
		return 0.0
	return sum(c.length() for c in caminhos) / len(caminhos)


def cloud_risk(h: HarmGraph, limits: PathLimits = PathLimits()) -> float:
	caminhos = enumerate_attack_paths(h, limits)
	return sum(path_risk(c, h.vms) for c in caminhos)


def return_on_attack(h: HarmGraph, limits: PathLimits = PathLimits()) -> float:
	"""Agrega R/AC da vulnerabilidade efetiva de cada nó, caminho a caminho, como o Cloud Risk."""
	caminhos = enumerate_attack_paths(h, limits)
	return sum(_caminho_roa(c, h.vms) for c in caminhos)


def mapl(h: HarmGraph, limits: PathLimits = PathLimits()) -> float:
	return _mapl(enumerate_attack_paths(h, limits))


def metrics_report(h: HarmGraph, limits: PathLimits = PathLimits()) -> MetricsReport:
	"""Calcula as três métricas com uma única enumeração de caminhos."""
	caminhos = enumerate_attack_paths(h, limits)
	riscos = tuple(PathRisk(c, path_risk(c, h.vms)) for c in caminhos)
	relatorio = MetricsReport(
		cloud_risk=sum(item.path_risk for item in riscos),
		roa=sum(_caminho_roa(c, h.vms) for c in caminhos),
		mapl=_mapl(caminhos),
		path_count=len(caminhos),
		per_path=riscos,
	)
	logger.debug(
		f"Métricas: CR={relatorio.cloud_risk:.3f} RoA={relatorio.roa:.3f} "
		f"MAPL={relatorio.mapl:.3f} caminhos={relatorio.path_count}"
	)
	return relatorio
