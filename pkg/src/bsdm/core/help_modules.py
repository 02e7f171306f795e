"""
Módulo para exibição dos módulos auxiliares em tabelas Rich.
"""

# Biblioteca padrão
import importlib
import pkgutil
from typing import Dict, List

# Bibliotecas de terceiros
from rich.box import ROUNDED
from rich.table import Table

# Módulos locais
from bsdm.core.auto_module import AutoModulo
from bsdm.core.style_cli import StyleCli


def discover_modules(type_module: str = "det") -> List[str]:
    """Nomes dos módulos disponíveis em bsdm.utils.auxiliary.<tipo>."""
    package = importlib.import_module(f"bsdm.utils.auxiliary.{type_module}")
    return sorted(info.name for info in pkgutil.iter_modules(package.__path__) if not info.ispkg)


def module_metadata(type_module: str = "det") -> Dict[str, dict]:
    """meta de cada módulo, indexado pelo nome."""
    return {
        name: AutoModulo(f"{type_module}:{name}").load_module().meta
        for name in discover_modules(type_module)
    }


def show_detectors(cli: StyleCli = None) -> Table:
    """
    Exibe os detectores disponíveis em formato de tabela.

    Returns:
        A tabela exibida
    """
    cli = cli or StyleCli()
    package = importlib.import_module("bsdm.utils.auxiliary.det")
    table = Table(
        title=f"Detectors ({package.MODULE_TYPE})", box=ROUNDED, title_justify="left"
    )
    table.add_column("Module", style="cyan bold")
    table.add_column("Name", style="green")
    table.add_column("Description", style="green")
    table.add_column("Example", style="yellow", overflow="fold")
    for name, meta in module_metadata("det").items():
        table.add_row(f"det:{name}", meta.get("name") or "-", meta.get("description") or "-",
                      meta.get("example") or "-")
    cli.console.print(table)
    return table
