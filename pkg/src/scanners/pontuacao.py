"""Subescores CVSS v3 na escala usada pelo modelo (E em décimos, I de 0 a 10)."""

from __future__ import annotations

from decimal import ROUND_HALF_UP, Decimal

from cvss import CVSS3
from cvss.exceptions import CVSS3Error

from src.harm.modelo import InvalidVulnerabilityError

_UMA_CASA = Decimal("0.1")


def _arredondar(valor: Decimal) -> Decimal:
	return Decimal(valor).quantize(_UMA_CASA, rounding=ROUND_HALF_UP)


def subscores_cvss3(vetor: str) -> tuple[float, float, float]:
	"""Devolve (base_score, exploitability, impact) para um vetor CVSS v3.

	exploitability = subescore de explorabilidade com uma casa, dividido por 10;
	impact = subescore de impacto com uma casa.
	"""
	try:
		calculo = CVSS3(vetor.strip())
	except (CVSS3Error, AttributeError) as exc:
		raise InvalidVulnerabilityError(f"vetor CVSS v3 inválido: {vetor!r} ({exc})") from exc
	base = float(calculo.base_score)
	exploitability = float(_arredondar(calculo.esc) / Decimal(10))
	impact = float(max(_arredondar(calculo.isc), Decimal(0)))
	return base, exploitability, impact
