"""Testes do modelo HARM, das métricas, da seleção de estratégias e do protocolo seguro."""
