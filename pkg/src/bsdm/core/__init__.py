"""
Pacote core.

Este pacote contém os módulos centrais do BSDM, incluindo:
- hsi_data: Cubos, máscaras, normalização, alinhamento de bandas e cena sintética
- diffusion: Agenda de difusão e ruído pseudo-fundo
- denoiser: Rede de remoção de ruído com gradientes analíticos
- training: Treinamento, otimizador e checkpoints
- suppression: Supressão de fundo por inferência múltipla
- detection: Mapas de detecção
- metrics: ROC, AUCs e separabilidade
- auto_module: Carregamento dinâmico de detectores
- basemodule: Classe base para módulos auxiliares
- help_modules: Listagem dos detectores disponíveis
- filelocal: Leitura de configurações e gravação de resultados
- output_formatter: Formatador dos CSVs e tabelas
- logger: Sistema centralizado de logging
- style_cli: Interface estilizada para CLI
- thread_process: Processamento paralelo de blocos de pixels
- exceptions: Hierarquia de erros com códigos de saída
"""
