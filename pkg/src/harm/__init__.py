"""Modelo de segurança HARM (grafo de ataque + árvores de ataque por VM)."""

from .modelo import (
	ATTACKER_ID,
	AttackPath,
	AttackTree,
	DanglingReferenceError,
	DuplicateVmError,
	Edge,
	HarmError,
	HarmGraph,
	InvalidEdgeError,
	InvalidVulnerabilityError,
	MissingTargetError,
	PathExplosionError,
	PathLimits,
	Provenance,
	TopologyDecl,
	VmNode,
	Vulnerability,
	build_harm,
	enumerate_attack_paths,
	vm_risk,
)

__all__ = [
	"ATTACKER_ID",
	"AttackPath",
	"AttackTree",
	"DanglingReferenceError",
	"DuplicateVmError",
	"Edge",
	"HarmError",
	"HarmGraph",
	"InvalidEdgeError",
	"InvalidVulnerabilityError",
	"MissingTargetError",
	"PathExplosionError",
	"PathLimits",
	"Provenance",
	"TopologyDecl",
	"VmNode",
	"Vulnerability",
	"build_harm",
	"enumerate_attack_paths",
	"vm_risk",
]
