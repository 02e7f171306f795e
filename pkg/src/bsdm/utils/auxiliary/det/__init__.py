"""
Pacote DET (detectores de anomalia).

Detectores usados para medir o ganho da supressão de fundo: cada módulo
recebe um HsiCube em options['data'] e registra um DetectionMap.

Constants:
    MODULE_TYPE (str): Identificador do tipo de módulo como 'detector'
"""
MODULE_TYPE = 'detector'
