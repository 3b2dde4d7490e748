"""harmmtd: análise de risco HARM em nuvem e defesa por migração de VMs."""

__all__ = []
