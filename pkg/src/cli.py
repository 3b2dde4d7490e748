"""Interface de linha de comando: analyze, select, report, serve, request, import e keygen.

Códigos de saída: 0 ok; 1 cenário/configuração/uso inválido; 2 explosão de caminhos;
3 limiar de risco inatingível; 4 falha de rede; 5 ack DENIED/FAILURE.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path
from typing import Callable, Sequence

from src.config import ConfigError, RunConfig, carregar_config, carregar_env, parse_endpoint
from src.database import DEFAULT_DB_PATH, seed_inscricoes_csv
from src.estrategia import (
	ComparisonTable,
	EvalOptions,
	InvalidStrategyError,
	ThresholdUnreachableError,
	baseline_de,
	carregar_estrategia,
	comparison_report,
	evaluate_all,
	salvar_estrategia,
	select_strategy,
)
from src.harm.cenario import Cenario, ScenarioError, carregar_cenario, cenario_de_dict
from src.harm.modelo import HarmError, PathExplosionError, build_harm
from src.logger import setup_logging
from src.metricas import metrics_report
from src.nuvem import CloudError
from src.protocolo import (
	EnterpriseClient,
	KeyMaterial,
	ProtocolError,
	ProviderServer,
	RegistrationDeniedError,
	ServidorTCP,
	suite_por_nome,
)
from src.protocolo.cripto import (
	carregar_chave_privada,
	carregar_chave_publica,
	gerar_par_chaves,
	salvar_chave_privada,
	salvar_chave_publica,
)
from src.protocolo.wire import MessageType
from src.scanners import carregar_nessus, mesclar_achados

logger = setup_logging("cli")

EXIT_OK = 0
EXIT_INVALIDO = 1
EXIT_EXPLOSAO = 2
EXIT_LIMIAR = 3
EXIT_REDE = 4
EXIT_RECUSADO = 5


def _opcoes_globais(parser: argparse.ArgumentParser, *, suprimir: bool = False) -> None:
	"""Opções aceitas antes ou depois do subcomando.

	Na cópia do subcomando (`suprimir=True`) a ausência da flag não apaga o valor dado antes dele.
	"""
	extra = {"default": argparse.SUPPRESS} if suprimir else {}
	parser.add_argument("--config", type=Path, help="arquivo TOML alternativo", **extra)
	parser.add_argument("--scenario", type=Path, help="arquivo de cenário (JSON)", **extra)
	parser.add_argument("--out-dir", type=Path, help="diretório dos relatórios", **extra)
	parser.add_argument("--max-depth", type=int, **extra)
	parser.add_argument("--max-paths", type=int, **extra)
	parser.add_argument("--no-coresidency", action="store_true", help="não derivar arestas de co-residência", **extra)
	parser.add_argument("--no-patching", action="store_true", help="avaliar apenas migrações", **extra)
	parser.add_argument("--threshold", type=float, help="CR máximo aceitável", **extra)
	parser.add_argument("--interval", type=int, help="segundos entre rodadas (modo periódico)", **extra)
	parser.add_argument("--rounds", type=int, help="número de rodadas no modo periódico", **extra)
	parser.add_argument("--workers", type=int, **extra)
	parser.add_argument("--endpoint", help="host:porta do provedor", **extra)
	parser.add_argument("--keys", type=Path, help="diretório das chaves PEM", **extra)
	parser.add_argument("--ep-code-file", type=Path, **extra)
	parser.add_argument("--enrollment", type=Path, help="CSV de inscrições (ep_code,tenant)", **extra)
	parser.add_argument("--strategy", type=Path, help="arquivo de estratégia", **extra)
	parser.add_argument("--suite", choices=["md5-compat", "modern"], **extra)


def _parser() -> argparse.ArgumentParser:
	comum = argparse.ArgumentParser(add_help=False)
	_opcoes_globais(comum, suprimir=True)

	parser = argparse.ArgumentParser(prog="harmmtd", description="Análise de risco HARM e defesa por migração de VMs")
	_opcoes_globais(parser)
	sub = parser.add_subparsers(dest="comando", required=True)
	sub.add_parser("analyze", parents=[comum], help="calcula CR, RoA e MAPL")
	sub.add_parser("select", parents=[comum], help="avalia e seleciona a estratégia defensiva")
	sub.add_parser("report", parents=[comum], help="mostra a tabela comparativa")
	serve = sub.add_parser("serve", parents=[comum], help="servidor do provedor")
	serve.add_argument("--db", type=Path, help="banco SQLite do provedor")
	request = sub.add_parser("request", parents=[comum], help="envia a estratégia ao provedor")
	request.add_argument("--save-transcript", type=Path)
	request.add_argument("--replay", type=Path, help="reenvia a mensagem de estratégia de uma transcrição")
	importar = sub.add_parser("import", parents=[comum], help="incorpora uma varredura Nessus ao cenário")
	importar.add_argument("--nessus", type=Path, required=True)
	keygen = sub.add_parser("keygen", parents=[comum], help="gera par de chaves RSA")
	keygen.add_argument("--role", choices=["provider", "enterprise"], required=True)
	return parser


def _run_config(args: argparse.Namespace) -> RunConfig:
	padrao = carregar_config(args.config)
	host = port = None
	if args.endpoint:
		host, port = parse_endpoint(args.endpoint)
	return RunConfig.a_partir_de(
		padrao,
		scenario_path=args.scenario,
		max_depth=args.max_depth,
		max_paths=args.max_paths,
		derive_coresidency=False if args.no_coresidency else None,
		include_patching=False if args.no_patching else None,
		threshold=args.threshold,
		interval_seconds=args.interval,
		rounds=args.rounds,
		workers=args.workers,
		host=host,
		port=port,
		suite=args.suite,
		keys_dir=args.keys,
		ep_code_file=args.ep_code_file,
		enrollment_path=args.enrollment,
		strategy_path=args.strategy,
		out_dir=args.out_dir,
	)


def _cenario(cfg: RunConfig) -> Cenario:
	if cfg.scenario_path is None:
		raise ConfigError("--scenario é obrigatório para este comando")
	return carregar_cenario(cfg.scenario_path)


def _opcoes(cfg: RunConfig, cenario: Cenario) -> EvalOptions:
	return EvalOptions(
		limits=cfg.limits,
		derive_coresidency=cfg.derive_coresidency,
		include_patching=cfg.include_patching,
		threshold=cfg.threshold,
		tenant=cenario.tenant,
		workers=cfg.workers,
	)


def cmd_analyze(cfg: RunConfig, args: argparse.Namespace) -> int:
	cenario = _cenario(cfg)
	h = build_harm(cenario.cloud, cenario.topology, cfg.derive_coresidency)
	relatorio = metrics_report(h, cfg.limits)
	relatorio.salvar(cfg.out_dir, cfg.casas_decimais)
	casas = cfg.casas_decimais
	print(
		f"CR={relatorio.cloud_risk:.{casas}f} RoA={relatorio.roa:.{casas}f} "
		f"MAPL={relatorio.mapl:.{casas}f} caminhos={relatorio.path_count}"
	)
	return EXIT_OK


def _avaliar(cfg: RunConfig) -> tuple[ComparisonTable, list, EvalOptions]:
	cenario = _cenario(cfg)
	opts = _opcoes(cfg, cenario)
	_, baseline = baseline_de(cenario.cloud, cenario.topology, opts)
	baseline.salvar(cfg.out_dir, cfg.casas_decimais)
	avaliacoes = evaluate_all(cenario.cloud, cenario.topology, opts, baseline=baseline)
	tabela = comparison_report(avaliacoes)
	if not avaliacoes:
		tabela = ComparisonTable(baseline={"cr": baseline.cloud_risk, "roa": baseline.roa, "mapl": baseline.mapl})
	return tabela, avaliacoes, opts


def _rodada_select(cfg: RunConfig) -> int:
	tabela, avaliacoes, opts = _avaliar(cfg)
	if not avaliacoes:
		tabela.salvar(cfg.out_dir, cfg.casas_decimais)
		salvar_estrategia(None, cfg.estrategia_path)
		print("Nenhum caminho de ataque até o alvo (NoThreat); nenhuma estratégia necessária")
		return EXIT_OK
	tabela.salvar(cfg.out_dir, cfg.casas_decimais)
	selecionada = select_strategy(avaliacoes, opts.threshold)
	tabela = comparison_report(avaliacoes, selecionada)
	tabela.salvar(cfg.out_dir, cfg.casas_decimais)
	salvar_estrategia(selecionada, cfg.estrategia_path)
	print(tabela.render_texto(cfg.casas_decimais))
	print(f"Selecionada: {selecionada.strategy.descricao()} ({selecionada.delta_pct:+.2f}%)")
	return EXIT_OK


def cmd_select(cfg: RunConfig, args: argparse.Namespace) -> int:
	if cfg.interval_seconds is None and cfg.rounds is None:
		return _rodada_select(cfg)
	rodada = 0
	codigo = EXIT_OK
	while True:
		rodada += 1
		logger.info(f"Rodada {rodada} de avaliação")
		codigo = _rodada_select(cfg)
		if cfg.rounds is not None and rodada >= cfg.rounds:
			return codigo
		if cfg.interval_seconds:
			time.sleep(cfg.interval_seconds)


def cmd_report(cfg: RunConfig, args: argparse.Namespace) -> int:
	tabela, _, _ = _avaliar(cfg)
	tabela.salvar(cfg.out_dir, cfg.casas_decimais)
	base = tabela.baseline or {}
	casas = cfg.casas_decimais
	print(f"Linha de base: CR={base.get('cr', 0.0):.{casas}f} RoA={base.get('roa', 0.0):.{casas}f} MAPL={base.get('mapl', 0.0):.{casas}f}")
	print(tabela.render_texto(casas))
	return EXIT_OK


def _chaves(cfg: RunConfig) -> Path:
	if cfg.keys_dir is None:
		raise ConfigError("--keys é obrigatório para este comando")
	return cfg.keys_dir


def cmd_keygen(cfg: RunConfig, args: argparse.Namespace) -> int:
	pasta = _chaves(cfg)
	privada = gerar_par_chaves(cfg.rsa_bits)
	salvar_chave_privada(privada, pasta / f"{args.role}.pem")
	salvar_chave_publica(privada.public_key(), pasta / f"{args.role}.pub.pem")
	print(f"Chaves de {args.role} gravadas em {pasta}")
	return EXIT_OK


def cmd_serve(cfg: RunConfig, args: argparse.Namespace) -> int:
	cenario = _cenario(cfg)
	privada = carregar_chave_privada(_chaves(cfg) / "provider.pem")
	db_path = args.db or DEFAULT_DB_PATH
	seed_inscricoes_csv(cfg.enrollment_path, db_path=db_path)
	provedor = ProviderServer(
		privada,
		cenario.cloud,
		db_path=db_path,
		session_timeout=cfg.session_timeout,
		max_frame_bytes=cfg.max_frame_bytes,
		out_dir=cfg.out_dir,
	)
	with ServidorTCP(cfg.endpoint, provedor, cfg.socket_timeout) as servidor:
		host, porta = servidor.endpoint
		print(f"Provedor ouvindo em {host}:{porta}", flush=True)
		try:
			servidor.serve_forever()
		except KeyboardInterrupt:
			logger.info("Servidor encerrado pelo operador")
	return EXIT_OK


def _ep_code(cfg: RunConfig) -> str:
	if cfg.ep_code_file is not None:
		return cfg.ep_code_file.read_text(encoding="utf-8").strip()
	if cfg.scenario_path is not None:
		cenario = carregar_cenario(cfg.scenario_path)
		if cenario.ep_code:
			return cenario.ep_code
	raise ConfigError("EP-code ausente: use --ep-code-file ou um cenário com ep_code")


def _gravar_transcricao(caminho: Path, suite: str, frames: list[bytes]) -> None:
	caminho.parent.mkdir(parents=True, exist_ok=True)
	caminho.write_text(
		json.dumps({"suite": suite, "frames": [f.hex() for f in frames]}, indent=2) + "\n",
		encoding="utf-8",
	)


def _frames_de_estrategia(caminho: Path) -> list[bytes]:
	try:
		dados = json.loads(caminho.read_text(encoding="utf-8"))
		frames = [bytes.fromhex(f) for f in dados["frames"]]
	except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
		raise ConfigError(f"transcrição ilegível: {caminho}: {exc}") from exc
	return [f for f in frames if len(f) > 4 and f[4] == MessageType.FURTHER]


def cmd_request(cfg: RunConfig, args: argparse.Namespace) -> int:
	pasta = _chaves(cfg)
	km = KeyMaterial(private_key=carregar_chave_privada(pasta / "enterprise.pem"), ep_code=_ep_code(cfg))
	provider_pub = carregar_chave_publica(pasta / "provider.pub.pem")
	suite = suite_por_nome(cfg.suite)

	with EnterpriseClient(km, provider_pub, cfg.endpoint, suite=suite, socket_timeout=cfg.socket_timeout, max_frame_bytes=cfg.max_frame_bytes) as cliente:
		if args.replay is not None:
			frames = _frames_de_estrategia(args.replay)
			if not frames:
				raise ConfigError(f"nenhuma mensagem de estratégia em {args.replay}")
			ack = cliente.reenviar(frames[-1])
		else:
			strategy = carregar_estrategia(cfg.estrategia_path)
			if strategy is None:
				print("Arquivo de estratégia vazio (NoThreat): nada a enviar")
				return EXIT_OK
			try:
				ack = cliente.enviar_estrategia(strategy)
			finally:
				if args.save_transcript is not None:
					_gravar_transcricao(args.save_transcript, suite.nome, cliente.transcricao)

	status = "SUCCESS" if ack.sucesso else "FAILURE"
	print(f"{status}: {ack.detalhe}")
	return EXIT_OK if ack.sucesso else EXIT_RECUSADO


def cmd_import(cfg: RunConfig, args: argparse.Namespace) -> int:
	_cenario(cfg)
	achados = carregar_nessus(args.nessus)
	texto = cfg.scenario_path.read_text(encoding="utf-8")  # type: ignore[union-attr]
	mesclado, nao_casados = mesclar_achados(json.loads(texto), achados)
	cenario_de_dict(mesclado, arquivo=args.nessus)
	destino = cfg.out_dir / f"{cfg.scenario_path.stem}_importado.json"  # type: ignore[union-attr]
	destino.parent.mkdir(parents=True, exist_ok=True)
	destino.write_text(json.dumps(mesclado, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
	print(f"{len(achados)} achados importados; cenário gravado em {destino}")
	for host in nao_casados:
		print(f"Sem VM correspondente: {host}")
	return EXIT_OK


_COMANDOS: dict[str, Callable[[RunConfig, argparse.Namespace], int]] = {
	"analyze": cmd_analyze,
	"select": cmd_select,
	"report": cmd_report,
	"serve": cmd_serve,
	"request": cmd_request,
	"import": cmd_import,
	"keygen": cmd_keygen,
}


def main(argv: Sequence[str] | None = None) -> int:
	carregar_env()
	args = _parser().parse_args(argv)
	try:
		cfg = _run_config(args)
		return _COMANDOS[args.comando](cfg, args)
	except ScenarioError as exc:
		print(f"erro: {exc}", file=sys.stderr)
		return EXIT_INVALIDO
	except PathExplosionError as exc:
		print(f"erro: {exc}", file=sys.stderr)
		return EXIT_EXPLOSAO
	except ThresholdUnreachableError as exc:
		print(f"erro: {exc}", file=sys.stderr)
		return EXIT_LIMIAR
	except RegistrationDeniedError:
		print("DENIED: EP-code recusado pelo provedor", file=sys.stderr)
		return EXIT_RECUSADO
	except (HarmError, CloudError, ConfigError, InvalidStrategyError, FileNotFoundError, ValueError) as exc:
		print(f"erro: {exc}", file=sys.stderr)
		return EXIT_INVALIDO
	except ProtocolError as exc:
		print(f"erro de protocolo ({exc.codigo}): {exc}", file=sys.stderr)
		return EXIT_RECUSADO
	except OSError as exc:
		print(f"falha de rede: {exc}", file=sys.stderr)
		return EXIT_REDE
	except Exception:
		logger.exception(f"Falha inesperada no comando {args.comando}")
		return EXIT_INVALIDO


if __name__ == "__main__":
	sys.exit(main())
