"""
Módulo base para criação de módulos auxiliares.

Este módulo contém a classe BaseModule que serve como classe base para todos
os detectores plugáveis do BSDM. Define a interface comum: metadados, opções,
armazenamento de resultados e tratamento padronizado de erros.
"""
# Bibliotecas padrão
import traceback
from typing import Any, List, Optional

# Módulos locais
from bsdm.config import setting
from bsdm.core.exceptions import BsdmError
from bsdm.core.logger import logger


class BaseModule:
    """
    Classe base para criação de módulos com funcionalidades específicas.

    Cada módulo deve herdar desta classe e implementar o método `run`, que lê
    as entradas de `options` e registra o resultado com `set_result`.

    Attributes:
        _result (dict): Resultados, indexados pelo nome da classe
        options (dict): Opções específicas do módulo (entrada em 'data')
        meta (dict): Meta-informações (name, description, example, type)
    """

    def __init__(self):
        """
        Inicializa estruturas básicas de resultados, opções e metadados.
        """
        self.setting = setting
        self._result = {f"{self._get_cls_name()}": []}

        self.options = {
            "data": None,
            "seed": 0,
        }

        self.meta = {
            "name": None,
            "description": None,
            "author": None,
            "version": None,
            "type": None,
            "example": None,
        }

    def set_result(self, value: Any):
        """
        Adiciona um resultado à lista de resultados do módulo.

        Args:
            value: Resultado (ex: DetectionMap); None é ignorado
        """
        if value is not None:
            self._result[self._get_cls_name()].append(value)

    def get_result(self) -> List[Any]:
        """
        Retorna a lista de resultados armazenados no módulo.
        """
        return list(self._result.values())[0]

    def log_debug(self, message):
        """
        Registra uma mensagem de debug prefixada com o nome do módulo.
        """
        logger.debug(message, module_name=self._get_cls_name())

    def _get_cls_name(self):
        return self.__class__.__name__

    def run(self, **kwargs):
        """
        Método abstrato que define o comportamento do módulo.

        Raises:
            NotImplementedError: Se a subclasse não implementar este método
        """
        raise NotImplementedError("Subclasses devem implementar o método run()")

    def handle_error(self, e: Exception, user_message: Optional[str] = None, raise_error: bool = False) -> None:
        """
        Método auxiliar para tratar erros de forma padronizada.

        Registra o detalhe técnico no log de debug e uma mensagem amigável no
        log de erro. Erros fora da hierarquia BsdmError também registram o
        traceback completo.

        Args:
            e: Exceção capturada
            user_message: Mensagem personalizada para o usuário (opcional)
            raise_error: Se True, re-lança a exceção após o registro

        Raises:
            Exception: Re-lança a exceção original se raise_error for True
        """
        error_type = type(e).__name__
        error_msg = str(e)

        logger.debug(f"{error_type}: {error_msg}", module_name=self._get_cls_name())

        if user_message:
            logger.error(f"{user_message}: {error_msg}")
        else:
            logger.error(f"Erro ({error_type}): {error_msg}")

        if not isinstance(e, (BsdmError, ValueError)):
            logger.exception(f"Traceback completo para {error_type}")
            logger.debug(traceback.format_exc(), module_name=self._get_cls_name())

        if raise_error:
            raise e
