# Biblioteca padrão
import logging

# Bibliotecas de terceiros
from rich.console import Console
from rich.logging import RichHandler

# Módulos locais
from bsdm.config import setting


class Logger:
    """Sistema centralizado de logging para o BSDM."""

    _instance = None
    _initialized = False

    # Mapeamento de níveis de verbosidade
    LEVEL_MAP = {
        1: 'info',
        2: 'warning',
        3: 'debug',
        4: 'error',
        5: 'exception'
    }

    def __new__(cls, name="bsdm"):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __init__(self, name="bsdm"):
        if self._initialized:
            return

        self.logger = logging.getLogger(name)
        self.logger.setLevel(logging.DEBUG)
        self.logger.propagate = False
        self.console = Console(stderr=True)
        self.active_levels = set()  # Níveis ativos para console
        self.file_handler = None
        self.error_file_handler = None

        # Evitar duplicação de handlers
        if not self.logger.handlers:
            self.console_handler = RichHandler(
                console=self.console, rich_tracebacks=True, show_time=False, markup=False
            )
            self.console_handler.setLevel(logging.DEBUG)
            self.console_handler.setFormatter(logging.Formatter('%(message)s'))
            self.logger.addHandler(self.console_handler)

        if setting.BSDM_ENABLE_FILE_LOGGING:
            self.enable_file_logging()

        self._initialized = True

    def enable_file_logging(self, directory=None):
        """
        Ativa a gravação de todos os registros em arquivo.

        Os arquivos não entram como handlers do logger: recebem cada registro
        diretamente, independente dos níveis ativos no console.

        Args:
            directory: Diretório dos logs (padrão: BSDM_LOG_DIRECTORY)
        """
        if self.file_handler is not None:
            return
        output = setting.LOG_FILE_OUTPUT
        errors = setting.LOG_FILE_ERRORS
        if directory is not None:
            output = directory / output.name
            errors = directory / errors.name
        output.parent.mkdir(parents=True, exist_ok=True)

        file_formatter = logging.Formatter('%(asctime)s - %(name)s - %(levelname)s - %(message)s')
        self.file_handler = logging.FileHandler(output)
        self.file_handler.setLevel(logging.DEBUG)
        self.file_handler.setFormatter(file_formatter)

        # Arquivo separado para erros
        self.error_file_handler = logging.FileHandler(errors)
        self.error_file_handler.setLevel(logging.ERROR)
        self.error_file_handler.setFormatter(file_formatter)

    def set_styled_console(self, styled_console):
        """
        Define o console estilizado para usar para saída.

        Args:
            styled_console: Instância do console com StyleHighlighter aplicado
        """
        self.console = styled_console
        if self.logger.handlers:
            self.logger.handlers[0].console = styled_console

    def set_verbose_levels(self, verbose_arg):
        """
        Define os níveis de verbosidade baseado no argumento -v.

        Args:
            verbose_arg (str|None): Níveis especificados (ex: "1", "1,2", "all", None)
        """
        if not verbose_arg:
            self.active_levels = set()
            return

        if verbose_arg == "all":
            self.active_levels = set(self.LEVEL_MAP.values())
            return

        # Parse níveis individuais ou combinados (ex: "1,2", "4,3")
        try:
            level_numbers = [int(x.strip()) for x in verbose_arg.split(',')]
            self.active_levels = {self.LEVEL_MAP[num] for num in level_numbers if num in self.LEVEL_MAP}
        except (ValueError, KeyError):
            self.active_levels = set()

    def is_level_active(self, level):
        """Verifica se um nível de log está ativo para console"""
        return level in self.active_levels

    def _to_file(self, level, message):
        if self.file_handler is None:
            return
        record = self.logger.makeRecord(self.logger.name, level, __file__, 0, message, (), None)
        self.file_handler.handle(record)
        if level >= logging.ERROR:
            self.error_file_handler.handle(record)

    def _emit(self, level, level_name, message):
        self._to_file(level, message)
        if self.is_level_active(level_name):
            self.logger.log(level, message)

    def debug(self, message, module_name=None):
        """Log debug messages"""
        prefix = f"[{module_name}] " if module_name else ""
        self._emit(logging.DEBUG, 'debug', f"{prefix}{message}")

    def info(self, message):
        """Log info messages"""
        self._emit(logging.INFO, 'info', message)

    def warning(self, message):
        """Log warning messages"""
        self._emit(logging.WARNING, 'warning', message)

    def error(self, message):
        """Log error messages"""
        self._emit(logging.ERROR, 'error', message)

    def exception(self, message):
        """Log exception messages with traceback"""
        self._emit(logging.ERROR, 'exception', message)

    def result(self, message):
        """Print clean results without any formatting or timestamps"""
        self._to_file(logging.INFO, message)
        self.console.print(message, markup=False)


# Global logger instance
logger = Logger()
