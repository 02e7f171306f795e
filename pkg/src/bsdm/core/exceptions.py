"""
Hierarquia de exceções do BSDM.

Todas as falhas previstas herdam de BsdmError. A CLI converte NumericError
no código de saída 2 e as demais no código 1.
"""


class BsdmError(Exception):
    """Erro base do BSDM."""

    exit_code = 1


class ConfigError(BsdmError):
    """Configuração inválida (arquivo, flag ou modelo pydantic)."""


class CubeFormatError(BsdmError):
    """Par header/payload de cubo ausente, inconsistente ou com valores não finitos."""


class MaskFormatError(BsdmError):
    """Graymap de máscara inválido."""


class BandAlignmentError(BsdmError):
    """Não é possível alinhar as bandas do cubo à largura treinada."""


class ScheduleError(BsdmError):
    """Parâmetros de agenda de difusão ou passo t fora do intervalo."""


class SceneError(BsdmError):
    """Cena sintética impossível de gerar com a configuração dada."""


class CheckpointError(BsdmError):
    """Manifest e blob do checkpoint não conferem."""


class NumericError(BsdmError):
    """Perda ou saída não finita, ou falha de fatoração."""

    exit_code = 2
