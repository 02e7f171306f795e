"""
Pacote de utilitários do BSDM.

Subpacotes:
    auxiliary: Módulos auxiliares organizados por tipo de funcionalidade
"""
