"""
Módulo responsável pelo carregamento automático de módulos auxiliares.

Importa dinamicamente ``bsdm.utils.auxiliary.{tipo}.{nome}`` a partir de uma
string 'tipo:nome' (ex: "det:rx") e instancia a classe BaseModule definida nele.
"""
# Biblioteca padrão
import importlib
import inspect
from typing import Optional

# Módulos locais
from bsdm.core.basemodule import BaseModule
from bsdm.core.exceptions import ConfigError
from bsdm.core.logger import logger


class AutoModulo:
    """
    Classe responsável pelo carregamento automático de módulos.

    Attributes:
        type_module (str): Tipo do módulo (ex: "det")
        name_module (str): Nome do módulo (ex: "rx")
        class_instance: Instância da classe carregada
    """

    def __init__(self, type_module_name_module: str):
        """
        Args:
            type_module_name_module (str): String no formato 'tipo:nome'

        Raises:
            ConfigError: Formato inválido
        """
        self._check_type_module_name_module(type_module_name_module)
        self.class_instance: Optional[BaseModule] = None

    def _check_type_module_name_module(self, type_module_name_module: str) -> None:
        type_module, _, name_module = type_module_name_module.partition(":")
        if not type_module or not name_module or ":" in name_module:
            raise ConfigError(
                f"invalid module spec {type_module_name_module!r}, expected 'type:name' (ex: det:rx)"
            )
        self.type_module = type_module
        self.name_module = name_module

    def load_module(self) -> BaseModule:
        """
        Carrega o módulo e instancia a classe BaseModule definida nele.

        Returns:
            Nova instância do módulo

        Raises:
            ConfigError: Módulo inexistente ou sem classe BaseModule
        """
        module_path = f"bsdm.utils.auxiliary.{self.type_module}.{self.name_module}"
        try:
            module = importlib.import_module(module_path)
        except ModuleNotFoundError as e:
            raise ConfigError(f"unknown module {self.type_module}:{self.name_module}") from e

        for _, class_obj in inspect.getmembers(module, inspect.isclass):
            if (class_obj.__module__ == module.__name__
                    and issubclass(class_obj, BaseModule) and class_obj is not BaseModule):
                self.class_instance = class_obj()
                logger.debug(f"loaded {module_path}.{class_obj.__name__}")
                return self.class_instance
        raise ConfigError(f"no BaseModule class found in {module_path}")
