"""
Módulo de processamento com threads.

Este módulo contém a classe ThreadProcess responsável por dividir matrizes de
pixels em blocos contíguos de tamanho fixo e processá-los em paralelo com
ThreadPoolExecutor. As operações do NumPy liberam o GIL, então threads
bastam para paralelismo intra-operação.

A partição em blocos não depende do número de threads: com o modo
determinístico ligado, 1 ou N threads produzem o mesmo resultado bit a bit.
"""
# Biblioteca padrão
import logging
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Any, Callable, List, Optional, Sequence, Tuple

# Módulos locais
from bsdm.config import setting


class ThreadProcess:
    """
    Classe responsável pelo processamento de blocos de pixels com threads.

    Attributes:
        max_thread (int): Número máximo de threads simultâneas
        block_size (int): Quantidade de pixels por bloco
        deterministic (bool): Redução na ordem dos blocos (True) ou na ordem de conclusão
    """
    def __init__(
        self,
        max_threads: Optional[int] = None,
        block_size: Optional[int] = None,
        deterministic: Optional[bool] = None,
        timeout: Optional[int] = None,
    ):
        """
        Inicializa a classe ThreadProcess com configurações padrão.

        Args:
            max_threads: Número máximo de threads simultâneas
            block_size: Pixels por bloco
            deterministic: Força a ordem fixa de redução
            timeout: Timeout para execução de cada lote de blocos (segundos)
        """
        self.max_thread = max_threads or setting.BSDM_THREAD_MAX
        self.block_size = block_size or setting.BSDM_BLOCK_SIZE
        self.deterministic = setting.BSDM_DETERMINISTIC if deterministic is None else deterministic
        self._timeout = timeout or setting.BSDM_THREAD_TIMEOUT
        self._logger = logging.getLogger(__name__)

        # Validate configuration
        if self.max_thread <= 0:
            raise ValueError("max_thread must be positive")
        if self.max_thread > setting.BSDM_MAX_THREAD_COUNT:
            raise ValueError(
                f"max_thread {self.max_thread} exceeds BSDM_MAX_THREAD_COUNT "
                f"({setting.BSDM_MAX_THREAD_COUNT})"
            )
        if self.block_size <= 0:
            raise ValueError("block_size must be positive")

    def blocks(self, n_rows: int) -> List[slice]:
        """
        Divide n_rows linhas em fatias contíguas de até block_size linhas.

        Args:
            n_rows: Quantidade de linhas (pixels)

        Returns:
            Lista de slices na ordem das linhas
        """
        return [slice(start, min(start + self.block_size, n_rows))
                for start in range(0, n_rows, self.block_size)]

    def map_blocks(self, function: Callable[[slice], Any], n_rows: int) -> List[Any]:
        """
        Executa function para cada bloco e retorna os resultados na ordem dos blocos.

        Args:
            function: Função que recebe um slice de linhas
            n_rows: Quantidade total de linhas

        Returns:
            Lista de resultados, um por bloco, na ordem das linhas
        """
        slices = self.blocks(n_rows)
        if self.max_thread == 1 or len(slices) == 1:
            return [function(block) for block in slices]
        with ThreadPoolExecutor(max_workers=self.max_thread) as executor:
            return list(executor.map(function, slices, timeout=self._timeout))

    def reduce_blocks(
        self,
        function: Callable[[slice], Any],
        n_rows: int,
        combine: Callable[[Any, Any], Any],
    ) -> Any:
        """
        Executa function por bloco e combina os resultados parciais.

        No modo determinístico a combinação segue a ordem dos blocos; fora dele,
        a ordem de conclusão das threads (a soma em ponto flutuante pode variar
        nos últimos bits).

        Args:
            function: Função que recebe um slice de linhas
            n_rows: Quantidade total de linhas
            combine: Combinação associativa de dois resultados parciais

        Returns:
            Resultado combinado
        """
        if self.deterministic or self.max_thread == 1:
            partials: Sequence[Any] = self.map_blocks(function, n_rows)
        else:
            partials = self._completion_order(function, n_rows)
        result = partials[0]
        for partial in partials[1:]:
            result = combine(result, partial)
        return result

    def _completion_order(self, function: Callable[[slice], Any], n_rows: int) -> List[Any]:
        results: List[Tuple[int, Any]] = []
        with ThreadPoolExecutor(max_workers=self.max_thread) as executor:
            futures = {executor.submit(function, block): index
                       for index, block in enumerate(self.blocks(n_rows))}
            try:
                for future in as_completed(futures, timeout=self._timeout):
                    results.append((futures[future], future.result()))
            except Exception as e:
                self._logger.error(f"Block execution failed: {e}")
                executor.shutdown(wait=False, cancel_futures=True)
                raise
        return [result for _, result in results]


# Pool sequencial usado quando nenhum é informado
default_pool = ThreadProcess(max_threads=1)
