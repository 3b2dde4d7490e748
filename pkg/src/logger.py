import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path

_LOG_DIR = Path(__file__).resolve().parents[1] / "logs"
_LOG_FILE = _LOG_DIR / "harmmtd.log"
_RAIZ = "harmmtd"
_ENV_NIVEL = "HARMMTD_LOG"

_console_handler: logging.Handler | None = None


def _resolver_nivel(nome: str | None) -> int:
    """Converte o nome do nível (ex.: "debug") em constante do logging; INFO se inválido."""
    if not nome:
        return logging.INFO
    nivel = logging.getLevelName(nome.strip().upper())
    return nivel if isinstance(nivel, int) else logging.INFO


def _configurar_raiz() -> logging.Logger:
    global _console_handler

    raiz = logging.getLogger(_RAIZ)
    if raiz.handlers:
        return raiz

    _LOG_DIR.mkdir(exist_ok=True)
    raiz.setLevel(logging.DEBUG)
    raiz.propagate = False

    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
    )

    # File Handler (Rotating)
    file_handler = RotatingFileHandler(
        _LOG_FILE, maxBytes=5*1024*1024, backupCount=3, encoding="utf-8"
    )
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(formatter)

    # Console em stderr: stdout fica livre para os relatórios da CLI
    _console_handler = logging.StreamHandler(sys.stderr)
    _console_handler.setLevel(_resolver_nivel(os.getenv(_ENV_NIVEL)))
    _console_handler.setFormatter(formatter)

    raiz.addHandler(file_handler)
    raiz.addHandler(_console_handler)

    nome_env = os.getenv(_ENV_NIVEL)
    if nome_env and not isinstance(logging.getLevelName(nome_env.strip().upper()), int):
        raiz.warning("Nível de log desconhecido em %s=%r, usando INFO", _ENV_NIVEL, nome_env)
    return raiz


def setup_logging(name: str) -> logging.Logger:
    """Configura e retorna um logger padronizado, filho do logger do pacote."""
    _configurar_raiz()
    return logging.getLogger(f"{_RAIZ}.{name}")


def configurar_nivel(nivel: str | None = None) -> None:
    """Reaplica o nível do console (útil depois de carregar o .env)."""
    _configurar_raiz()
    if _console_handler is not None:
        _console_handler.setLevel(_resolver_nivel(nivel if nivel is not None else os.getenv(_ENV_NIVEL)))
