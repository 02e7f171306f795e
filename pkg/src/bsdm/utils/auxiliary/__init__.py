"""
Pacote de módulos auxiliares do BSDM.

Os módulos são carregados dinamicamente pelo AutoModulo a partir do formato
'tipo:nome' (ex: 'det:rx').

Tipos de módulos suportados:
    det: Detectores de anomalia que produzem um DetectionMap a partir de um cubo

Estrutura de módulos:
    Cada módulo deve herdar de BaseModule e implementar o método run().
"""
