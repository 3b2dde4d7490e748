"""Projeção da situação: avaliação exaustiva de migração (VM-LM) e correção, seleção e relatórios.

Cada candidato é aplicado sobre uma cópia persistente do estado (`apply_migration` /
`apply_patch`), o HARM é reconstruído e as métricas recalculadas. O estado de entrada
nunca é alterado.
"""

from __future__ import annotations

import concurrent.futures
import json
import math
from dataclasses import dataclass, field
from enum import StrEnum
from pathlib import Path
from typing import Any, Iterable

import pandas as pd

from src.harm.modelo import (
	HarmGraph,
	PathExplosionError,
	PathLimits,
	TopologyDecl,
	Vulnerability,
	VmNode,
	build_harm,
)
from src.logger import setup_logging
from src.metricas import MetricsReport, metrics_report
from src.nuvem import CloudState, apply_migration, apply_patch

logger = setup_logging("estrategia")

MARCA_SELECIONADA = "✓"
COLUNAS_COMPARACAO = ["vm_id", "patch_delta_pct", "vmlm_delta_pct", "selected"]


class InvalidStrategyError(ValueError):
	"""Estratégia malformada (tipo desconhecido ou campo obrigatório ausente)."""


class EmptyEvaluationSetError(ValueError):
	"""Nenhuma avaliação válida para escolher."""


class ThresholdUnreachableError(RuntimeError):
	"""Nenhum candidato atinge o limiar de risco aceitável."""

	def __init__(self, threshold: float, melhor: float):
		super().__init__(f"nenhum candidato atinge CR <= {threshold} (melhor projeção: {melhor:.3f})")
		self.threshold = threshold
		self.melhor = melhor


class StrategyKind(StrEnum):
	LIVE_MIGRATE = "LiveMigrate"
	PATCH = "Patch"


@dataclass(frozen=True, slots=True)
class Strategy:
	kind: StrategyKind
	vm_id: str
	dest_host: str | None = None
	cve_id: str | None = None

	def __post_init__(self) -> None:
		try:
			object.__setattr__(self, "kind", StrategyKind(self.kind))
		except ValueError:
			raise InvalidStrategyError(f"tipo de estratégia desconhecido: {self.kind!r}") from None
		if not isinstance(self.vm_id, str) or not self.vm_id:
			raise InvalidStrategyError("vm_id obrigatório")
		if self.kind is StrategyKind.LIVE_MIGRATE:
			if not self.dest_host or self.cve_id is not None:
				raise InvalidStrategyError("LiveMigrate exige dest_host (e nenhum cve_id)")
		elif not self.cve_id or self.dest_host is not None:
			raise InvalidStrategyError("Patch exige cve_id (e nenhum dest_host)")

	@classmethod
	def migrar(cls, vm_id: str, dest_host: str) -> "Strategy":
		return cls(StrategyKind.LIVE_MIGRATE, vm_id, dest_host=dest_host)

	@classmethod
	def corrigir(cls, vm_id: str, cve_id: str) -> "Strategy":
		return cls(StrategyKind.PATCH, vm_id, cve_id=cve_id)

	@property
	def alvo_acao(self) -> str:
		"""Host de destino ou CVE, conforme o tipo."""
		return self.dest_host if self.kind is StrategyKind.LIVE_MIGRATE else self.cve_id  # type: ignore[return-value]

	def sort_key(self) -> tuple[int, str, str]:
		return (0 if self.kind is StrategyKind.LIVE_MIGRATE else 1, self.vm_id, self.alvo_acao)

	def to_dict(self) -> dict[str, str]:
		dados = {"kind": self.kind.value, "vm_id": self.vm_id}
		if self.kind is StrategyKind.LIVE_MIGRATE:
			dados["dest_host"] = self.dest_host  # type: ignore[assignment]
		else:
			dados["cve_id"] = self.cve_id  # type: ignore[assignment]
		return dados

	@classmethod
	def from_dict(cls, dados: Any) -> "Strategy":
		if not isinstance(dados, dict):
			raise InvalidStrategyError("estratégia precisa ser um objeto JSON")
		extras = set(dados) - {"kind", "vm_id", "dest_host", "cve_id"}
		if extras:
			raise InvalidStrategyError(f"campos desconhecidos: {', '.join(sorted(extras))}")
		return cls(
			kind=dados.get("kind"),  # type: ignore[arg-type]
			vm_id=dados.get("vm_id"),  # type: ignore[arg-type]
			dest_host=dados.get("dest_host"),
			cve_id=dados.get("cve_id"),
		)

	def to_bytes(self) -> bytes:
		return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")).encode("utf-8")

	@classmethod
	def from_bytes(cls, dados: bytes) -> "Strategy":
		try:
			return cls.from_dict(json.loads(dados.decode("utf-8")))
		except (UnicodeDecodeError, json.JSONDecodeError) as exc:
			raise InvalidStrategyError(f"estratégia ilegível: {exc}") from exc

	def descricao(self) -> str:
		if self.kind is StrategyKind.LIVE_MIGRATE:
			return f"VM-LM {self.vm_id} -> {self.dest_host}"
		return f"Patch {self.cve_id} em {self.vm_id}"


def apply_strategy(state: CloudState, strategy: Strategy) -> CloudState:
	"""Executa a estratégia no simulador e devolve o novo estado."""
	if strategy.kind is StrategyKind.LIVE_MIGRATE:
		return apply_migration(state, strategy.vm_id, strategy.dest_host)  # type: ignore[arg-type]
	return apply_patch(state, strategy.vm_id, strategy.cve_id)  # type: ignore[arg-type]


@dataclass(frozen=True)
class StrategyEvaluation:
	strategy: Strategy
	baseline_cr: float
	projected_cr: float
	delta_pct: float
	projected_roa: float
	projected_mapl: float
	baseline_roa: float = 0.0
	baseline_mapl: float = 0.0
	projected_path_count: int = 0
	error: str | None = None

	@property
	def ok(self) -> bool:
		return self.error is None

	def para_dict(self, casas: int = 3) -> dict[str, Any]:
		def arred(valor: float) -> float | None:
			return None if math.isnan(valor) else round(valor, casas)

		return {
			"strategy": self.strategy.to_dict(),
			"baseline_cr": arred(self.baseline_cr),
			"projected_cr": arred(self.projected_cr),
			"delta_pct": arred(self.delta_pct),
			"projected_roa": arred(self.projected_roa),
			"projected_mapl": arred(self.projected_mapl),
			"projected_path_count": self.projected_path_count,
			"error": self.error,
		}


@dataclass(frozen=True)
class EvalOptions:
	limits: PathLimits = field(default_factory=PathLimits)
	derive_coresidency: bool = True
	include_patching: bool = True
	# CR máximo aceitável; a seleção falha com ThresholdUnreachableError acima dele
	threshold: float | None = None
	tenant: str | None = None
	workers: int = 1


def delta_percentual(baseline: float, projetado: float) -> float:
	if baseline == 0:
		return 0.0
	return 100.0 * (projetado - baseline) / baseline


def _correcao_efetiva(vm: VmNode) -> Vulnerability | None:
	"""Folha corrigível de maior severidade (a vencedora da porta OR, quando corrigível)."""
	corrigiveis = [v for v in vm.attack_tree.leaves if v.patchable]
	if not corrigiveis:
		return None
	return min(corrigiveis, key=lambda v: (-v.severity(), v.cve_id))


def _candidatos(state: CloudState, opts: EvalOptions) -> list[Strategy]:
	candidatos: list[Strategy] = []
	for vm_id in sorted(state.vms):
		vm = state.vms[vm_id]
		if opts.tenant is not None and vm.tenant != opts.tenant:
			continue
		for host_id in sorted(state.host_ids):
			if host_id != vm.host_id and state.free_slots(host_id) > 0:
				candidatos.append(Strategy.migrar(vm_id, host_id))
		if opts.include_patching:
			vuln = _correcao_efetiva(vm)
			if vuln is not None:
				candidatos.append(Strategy.corrigir(vm_id, vuln.cve_id))
	return candidatos


def _avaliar(
	state: CloudState,
	topology: TopologyDecl,
	strategy: Strategy,
	baseline: MetricsReport,
	opts: EvalOptions,
) -> StrategyEvaluation:
	projetado = apply_strategy(state, strategy)
	try:
		relatorio = metrics_report(build_harm(projetado, topology, opts.derive_coresidency), opts.limits)
	except PathExplosionError as exc:
		logger.warning(f"Candidato {strategy.descricao()} falhou: {exc}")
		return StrategyEvaluation(
			strategy=strategy,
			baseline_cr=baseline.cloud_risk,
			projected_cr=math.nan,
			delta_pct=math.nan,
			projected_roa=math.nan,
			projected_mapl=math.nan,
			baseline_roa=baseline.roa,
			baseline_mapl=baseline.mapl,
			error=str(exc),
		)
	avaliacao = StrategyEvaluation(
		strategy=strategy,
		baseline_cr=baseline.cloud_risk,
		projected_cr=relatorio.cloud_risk,
		delta_pct=delta_percentual(baseline.cloud_risk, relatorio.cloud_risk),
		projected_roa=relatorio.roa,
		projected_mapl=relatorio.mapl,
		baseline_roa=baseline.roa,
		baseline_mapl=baseline.mapl,
		projected_path_count=relatorio.path_count,
	)
	logger.debug(f"{strategy.descricao()}: CR {relatorio.cloud_risk:.3f} ({avaliacao.delta_pct:+.2f}%)")
	return avaliacao


def evaluate_all(
	state: CloudState,
	topology: TopologyDecl,
	opts: EvalOptions = EvalOptions(),
	*,
	baseline: MetricsReport | None = None,
) -> list[StrategyEvaluation]:
	"""Avalia todas as migrações viáveis e (opcionalmente) uma correção por VM.

	Sem caminhos de ataque na linha de base não há o que defender: devolve lista vazia.
	A ordem do resultado é a dos candidatos (vm_id, tipo, destino/CVE), com ou sem paralelismo.
	"""
	if baseline is None:
		baseline = metrics_report(build_harm(state, topology, opts.derive_coresidency), opts.limits)
	if baseline.path_count == 0:
		logger.warning("Nenhum caminho de ataque até o alvo (NoThreat): nada a avaliar")
		return []

	candidatos = _candidatos(state, opts)
	logger.info(f"Avaliando {len(candidatos)} candidatos (CR base {baseline.cloud_risk:.3f})")

	if opts.workers > 1 and len(candidatos) > 1:
		with concurrent.futures.ThreadPoolExecutor(max_workers=opts.workers, thread_name_prefix="estrategia") as executor:
			futuros = [executor.submit(_avaliar, state, topology, c, baseline, opts) for c in candidatos]
			avaliacoes = [f.result() for f in futuros]
	else:
		avaliacoes = [_avaliar(state, topology, c, baseline, opts) for c in candidatos]

	avaliacoes.sort(key=lambda e: (e.strategy.vm_id, e.strategy.sort_key()))
	return avaliacoes


def _chave_selecao(avaliacao: StrategyEvaluation) -> tuple:
	tipo, vm_id, alvo = avaliacao.strategy.sort_key()
	return (avaliacao.projected_cr, tipo, vm_id, alvo)


def select_strategy(evals: Iterable[StrategyEvaluation], threshold: float | None = None) -> StrategyEvaluation:
	"""Argmin do CR projetado; empate: VM-LM antes de patch, depois menor vm_id e destino/CVE."""
	validas = [e for e in evals if e.ok]
	if not validas:
		raise EmptyEvaluationSetError("nenhuma avaliação válida para selecionar")
	melhor = min(validas, key=_chave_selecao)
	if threshold is not None and melhor.projected_cr > threshold:
		raise ThresholdUnreachableError(threshold, melhor.projected_cr)
	logger.info(f"Estratégia selecionada: {melhor.strategy.descricao()} ({melhor.delta_pct:+.2f}%)")
	return melhor


@dataclass(frozen=True, slots=True)
class ComparisonRow:
	vm_id: str
	patch_delta_pct: float | None
	vmlm_delta_pct: float | None
	selected: bool


@dataclass(frozen=True)
class ComparisonTable:
	rows: tuple[ComparisonRow, ...] = ()
	selecionada: StrategyEvaluation | None = None
	baseline: dict[str, float] | None = None
	per_strategy: tuple[StrategyEvaluation, ...] = ()

	def para_dataframe(self) -> pd.DataFrame:
		linhas = [
			{
				"vm_id": row.vm_id,
				"patch_delta_pct": row.patch_delta_pct,
				"vmlm_delta_pct": row.vmlm_delta_pct,
				"selected": MARCA_SELECIONADA if row.selected else "",
			}
			for row in self.rows
		]
		return pd.DataFrame(linhas, columns=COLUNAS_COMPARACAO)

	def para_dict(self, casas: int = 3) -> dict[str, Any]:
		return {
			"rows": [
				{
					"vm_id": row.vm_id,
					"patch_delta_pct": None if row.patch_delta_pct is None else round(row.patch_delta_pct, casas),
					"vmlm_delta_pct": None if row.vmlm_delta_pct is None else round(row.vmlm_delta_pct, casas),
					"selected": row.selected,
				}
				for row in self.rows
			],
			"selected": self.selecionada.para_dict(casas) if self.selecionada else None,
		}

	def radar(self, casas: int = 3) -> dict[str, Any]:
		"""Triplas (CR, RoA, MAPL) da linha de base e de cada estratégia avaliada."""
		base = None
		if self.baseline is not None:
			base = {chave: round(valor, casas) for chave, valor in self.baseline.items()}
		return {
			"baseline": base,
			"per_strategy": [
				{
					"strategy": e.strategy.to_dict(),
					"cr": round(e.projected_cr, casas),
					"roa": round(e.projected_roa, casas),
					"mapl": round(e.projected_mapl, casas),
					"delta_pct": round(e.delta_pct, casas),
					"selected": e is self.selecionada,
				}
				for e in self.per_strategy
				if e.ok
			],
		}

	def render_texto(self, casas: int = 3) -> str:
		df = self.para_dataframe()
		if df.empty:
			return "(nenhuma estratégia avaliada)"
		return df.to_string(index=False, na_rep="-", float_format=lambda v: f"{v:.{casas}f}")

	def salvar(self, out_dir: Path, casas: int = 3) -> list[Path]:
		"""Grava `comparacao.csv`, `comparacao.json` e `radar.json`."""
		out_dir.mkdir(parents=True, exist_ok=True)
		csv_path = out_dir / "comparacao.csv"
		json_path = out_dir / "comparacao.json"
		radar_path = out_dir / "radar.json"
		self.para_dataframe().to_csv(csv_path, index=False, float_format=f"%.{casas}f", lineterminator="\n")
		json_path.write_text(json.dumps(self.para_dict(casas), indent=2, sort_keys=True, ensure_ascii=False) + "\n", encoding="utf-8")
		radar_path.write_text(json.dumps(self.radar(casas), indent=2, sort_keys=True) + "\n", encoding="utf-8")
		return [csv_path, json_path, radar_path]


def _melhor_delta(evals: list[StrategyEvaluation], tipo: StrategyKind) -> float | None:
	deltas = [e.delta_pct for e in evals if e.ok and e.strategy.kind is tipo]
	return min(deltas) if deltas else None


def comparison_report(
	evals: Iterable[StrategyEvaluation],
	selecionada: StrategyEvaluation | None = None,
) -> ComparisonTable:
	"""Tabela por VM com o melhor delta de patch e de VM-LM e a marca da estratégia escolhida."""
	avaliacoes = list(evals)
	if not avaliacoes:
		return ComparisonTable()
	if selecionada is None:
		try:
			selecionada = select_strategy(avaliacoes)
		except EmptyEvaluationSetError:
			selecionada = None

	por_vm: dict[str, list[StrategyEvaluation]] = {}
	for avaliacao in avaliacoes:
		por_vm.setdefault(avaliacao.strategy.vm_id, []).append(avaliacao)

	linhas = tuple(
		ComparisonRow(
			vm_id=vm_id,
			patch_delta_pct=_melhor_delta(itens, StrategyKind.PATCH),
			vmlm_delta_pct=_melhor_delta(itens, StrategyKind.LIVE_MIGRATE),
			selected=selecionada is not None and selecionada.strategy.vm_id == vm_id,
		)
		for vm_id, itens in sorted(por_vm.items())
	)
	primeira = avaliacoes[0]
	return ComparisonTable(
		rows=linhas,
		selecionada=selecionada,
		baseline={"cr": primeira.baseline_cr, "roa": primeira.baseline_roa, "mapl": primeira.baseline_mapl},
		per_strategy=tuple(avaliacoes),
	)


def salvar_estrategia(avaliacao: StrategyEvaluation | None, caminho: Path) -> Path:
	"""Grava a estratégia selecionada; sem ameaça, grava um objeto vazio."""
	caminho.parent.mkdir(parents=True, exist_ok=True)
	dados = avaliacao.strategy.to_dict() if avaliacao is not None else {}
	caminho.write_text(json.dumps(dados, indent=2, sort_keys=True) + "\n", encoding="utf-8")
	return caminho


def carregar_estrategia(caminho: Path) -> Strategy | None:
	"""Lê o arquivo de estratégia; `None` quando o arquivo registra ausência de ameaça."""
	try:
		dados = json.loads(caminho.read_text(encoding="utf-8"))
	except json.JSONDecodeError as exc:
		raise InvalidStrategyError(f"{caminho}: JSON inválido: {exc}") from exc
	if dados == {}:
		return None
	return Strategy.from_dict(dados)


def baseline_de(state: CloudState, topology: TopologyDecl, opts: EvalOptions) -> tuple[HarmGraph, MetricsReport]:
	h = build_harm(state, topology, opts.derive_coresidency)
	return h, metrics_report(h, opts.limits)
