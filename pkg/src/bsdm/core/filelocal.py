"""
Módulo responsável pela manipulação de arquivos locais.

Leitura de arquivos de configuração (YAML/JSON), gravação de CSV e JSON e o
eco da configuração resolvida que acompanha cada saída da CLI.
"""

# Biblioteca padrão
import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence, Type, TypeVar, Union

# Bibliotecas de terceiros
import yaml
from pydantic import BaseModel, ValidationError

# Módulos locais
from bsdm.core.exceptions import ConfigError
from bsdm.core.logger import logger

ModelT = TypeVar("ModelT", bound=BaseModel)
PathLike = Union[str, Path]


def build_model(model_cls: Type[ModelT], data: Optional[Dict[str, Any]] = None) -> ModelT:
    """
    Valida um dicionário contra um modelo pydantic.

    Args:
        model_cls: Classe do modelo (SceneConfig, TrainConfig, AeConfig)
        data: Campos informados; ausentes usam os padrões de setting

    Returns:
        Instância validada

    Raises:
        ConfigError: Diagnóstico do pydantic
    """
    try:
        return model_cls.model_validate(data or {})
    except ValidationError as e:
        details = "; ".join(
            f"{'.'.join(str(part) for part in err['loc']) or 'config'}: {err['msg']}"
            for err in e.errors()
        )
        raise ConfigError(f"invalid {model_cls.__name__}: {details}") from e


class FileLocal:
    """
    Classe responsável por operações de arquivo local.
    """

    def open_config(self, filename: PathLike) -> Dict[str, Any]:
        """
        Lê um arquivo de configuração YAML (JSON também é aceito).

        Args:
            filename: Caminho do arquivo

        Returns:
            Dicionário com as chaves do arquivo (vazio para arquivo vazio)

        Raises:
            ConfigError: Arquivo ausente, inválido ou que não seja um mapeamento
        """
        path = Path(filename)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            with path.open("r", encoding="utf-8") as handle:
                data = yaml.safe_load(handle)
        except yaml.YAMLError as e:
            raise ConfigError(f"could not parse {path}: {e}") from e
        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ConfigError(f"{path} must contain a mapping, got {type(data).__name__}")
        logger.debug(f"CONFIG: loaded {path}")
        return data

    def save_value(self, value: str, file: PathLike) -> None:
        """
        Grava um texto sobrescrevendo o arquivo, criando diretórios se preciso.
        """
        path = Path(file)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(value, encoding="utf-8")

    def save_csv(
        self,
        file: PathLike,
        header: Sequence[str],
        rows: Iterable[Sequence[Any]],
        footer: Optional[str] = None,
    ) -> None:
        """
        Grava um CSV com cabeçalho e, opcionalmente, uma linha de rodapé livre.

        Args:
            file: Caminho do CSV
            header: Nomes das colunas
            rows: Linhas de valores
            footer: Linha final gravada como está (ex: resumo comentado)
        """
        path = Path(file)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
            if footer:
                handle.write(footer + "\n")
        logger.debug(f"CSV written: {path}")

    def save_json(self, data: Dict[str, Any], file: PathLike) -> None:
        """Grava um dicionário como JSON indentado."""
        self.save_value(json.dumps(data, indent=2, sort_keys=True, default=str), file)

    def echo_config(self, out: PathLike, data: Dict[str, Any]) -> Path:
        """
        Grava ``<out>.config.json`` com a configuração resolvida da execução.

        Returns:
            Caminho do arquivo gravado
        """
        path = Path(f"{out}.config.json")
        self.save_json(data, path)
        logger.info(f"CONFIG: echo written to {path}")
        return path
