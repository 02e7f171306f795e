"""
Pacote de configuração do BSDM.

Este pacote contém o arquivo default.json e o módulo setting, que carrega
os valores padrão (difusão, treino, detectores, logs, threads) como atributos
de módulo e aplica sobrescritas vindas do ambiente.

Módulos:
    setting: Configurações globais incluindo logs, threads e hiperparâmetros
"""
