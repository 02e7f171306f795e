"""
Módulo de estilização da interface CLI.

Este módulo fornece classes para estilização e highlight da interface de linha
de comando usando a biblioteca Rich, incluindo tema customizado, highlighter
de métricas e dimensões de cubo, e formatação de argumentos.
"""
import argparse
import sys

from rich.console import Console
from rich.highlighter import RegexHighlighter
from rich.theme import Theme


class StyleHighlighter(RegexHighlighter):
    """
    Classe para highlight de sintaxe customizado.

    Colore automaticamente métricas (AUC, perda, lr), dimensões de cubos,
    caminhos de arquivos e palavras de status na saída da CLI.

    Attributes:
        theme (Theme): Tema Rich com cores customizadas
        base_style (str): Prefixo base para estilos
        highlights (list): Lista de padrões regex para highlight

    References:
        https://rich.readthedocs.io/en/stable/appendix/colors.html#appendix-colors
        https://rich.readthedocs.io/en/stable/markup.html#console-markup
    """
    theme = Theme(
        {
            "sty.param":        "bright_yellow",
            "sty.info":         "bold yellow1",
            "sty.label":        "yellow3",
            "sty.metric":       "bright_magenta",
            "sty.shape":        "cyan1",
            "sty.number":       "bright_green",
            "sty.file":         "bright_black",
            "sty.error":        "bright_red",
            "sty.success":      "green",
            "sty.warning":      "yellow",
            "sty.arm":          "blue_violet",
        }
    )

    base_style = "sty."
    highlights = [
        r"(?P<error>(error|failed|invalid|rejected|non-finite|diverged))",
        r"(?P<success>(done|finished|written|saved|ok))",
        r"(?P<warning>(warning|shift|mismatch))",
        r"(?P<info>\[\!\]|\[\+\]|\[\*\]|INFO:|DEBUG:)",
        r"(?P<label>(CUBE|MASK|CKPT|MAP|REPORT|CONFIG):)",
        r"(?P<metric>\b(auc_pd_pf|auc_pf_tau|gap|background_iqr|loss|lr)\b)",
        r"(?P<arm>\b(baseline|suppressed)\b)",
        r"(?P<shape>\b\d+x\d+x\d+\b)",
        r"(?P<number>\b-?\d+\.\d+(?:e[-+]?\d+)?\b)",
        r"(?P<file>([\/\\][\w\-\.\s]+[\/\\])+[\w\-\.]+)",
        r"(?P<param>--[a-zA-Z0-9_-]+(?:=\S*)?)",
    ]


class RichArgumentParser(argparse.ArgumentParser):
    """
    Parser de argumentos customizado com suporte ao Rich.

    Mensagens e help passam pelo console Rich; erros de uso encerram com
    código 1 em vez do código 2 padrão do argparse, reservado a falhas
    numéricas.
    """
    def _print_message(self, message, file=None):
        """
        Imprime mensagem usando console Rich.

        Args:
            message: Mensagem a ser impressa
            file: Arquivo de destino (não utilizado)
        """
        if message:
            cli = StyleCli()
            return cli.console.print(message, markup=False)

    def error(self, message):
        """
        Exibe o uso e encerra com código 1.

        Args:
            message: Mensagem de erro do argparse
        """
        self.print_usage(sys.stderr)
        cli = StyleCli()
        cli.console.print(f"[!] {self.prog}: error: {message}", markup=False)
        sys.exit(1)


class RawDescriptionHelpFormatter(argparse.RawDescriptionHelpFormatter):
    """
    Formatador de help que preserva quebras de linha das descrições.
    """
    def _split_lines(self, text: str, width):
        """
        Divide texto em linhas preservando as quebras originais.

        Args:
            text (str): Texto a ser dividido
            width: Largura máxima (não utilizado)

        Returns:
            Lista de linhas
        """
        if text:
            return text.splitlines()
        return []


class StyleCli:
    """
    Classe principal para interface CLI estilizada.

    Gerencia o console Rich com o highlighter de métricas do BSDM.

    Attributes:
        console_highlighter (StyleHighlighter): Instância do highlighter
        console (Console): Console Rich configurado
    """
    def __init__(self):
        """
        Inicializa StyleCli com console Rich configurado.
        """
        self.console_highlighter = StyleHighlighter()
        self.console = Console(
            highlighter=self.console_highlighter,
            theme=self.console_highlighter.theme,
            log_path=False,
            highlight=True,
            log_time_format='[%f] %Y-%m-%d,%H:%M:%S'
        )
