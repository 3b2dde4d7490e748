"""Ingestão de resultados de varredura de vulnerabilidades."""

from .nessus import AchadoVarredura, carregar_nessus, mesclar_achados, parse_nessus
from .pontuacao import subscores_cvss3

__all__ = ["AchadoVarredura", "carregar_nessus", "mesclar_achados", "parse_nessus", "subscores_cvss3"]
