# main.py
"""
V2XSentinel command line.

    python main.py simulate [--config PATH] [--out DIR] [--seed INT] [--ngsim PATH]
    python main.py train    [--config PATH] [--out DIR] [--seed INT] [--model PATH]
    python main.py detect   [--config PATH] [--out DIR] [--seed INT] [--model PATH]
                            [--scenario PATH] [--graphs PATH]
    python main.py evaluate SERIES.csv [SERIES.csv ...] [--out DIR] [--average]

Exit codes: 0 normal, 2 abnormal frames detected, 1 error.
"""

import argparse
import logging
import sys

from constants import APP_NAME, APP_VERSION, EXIT_ERROR, EXIT_NORMAL
from controllers import DetectController, EvaluateController, SimulateController, TrainController
from core.exceptions import UsageError, V2XSentinelError
from utils.config import load_config
from utils.error_handler import report_error
from utils.logger import get_logger, log_exception, set_log_level, setup_logging

logger = get_logger(__name__)


class CommandLineParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of exiting."""

    def error(self, message):
        raise UsageError(f"Uso incorrecto: {message}", details=self.format_usage().strip())


def build_parser() -> CommandLineParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Archivo JSON de configuración (se combina con los valores por defecto)")
    common.add_argument("--out", help="Directorio de salida (reemplaza output.dir)")
    common.add_argument("--seed", type=int, help="Semilla (reemplaza seed de la configuración)")
    common.add_argument("--model", help="Archivo de modelo (por defecto <out>/model.json)")
    common.add_argument("--verbose", action="store_true", help="Registro detallado (DEBUG)")

    parser = CommandLineParser(prog="v2xsentinel", description=f"{APP_NAME} {APP_VERSION}")
    parser.add_argument("--version", action="version", version=f"{APP_NAME} {APP_VERSION}")
    commands = parser.add_subparsers(dest="command", parser_class=CommandLineParser)
    commands.required = True

    simulate = commands.add_parser("simulate", parents=[common], help="Genera el escenario y los flujos de grafos")
    simulate.add_argument("--ngsim", help="Tabla NGSIM nativa a convertir como escenario")

    commands.add_parser("train", parents=[common], help="Aprende el modelo a partir de los flujos limpios")

    detect = commands.add_parser("detect", parents=[common], help="Detecta anomalías en un flujo de prueba")
    detect.add_argument("--scenario", help="Escenario de prueba (por defecto <out>/scenario.json)")
    detect.add_argument("--graphs", help="Flujo de grafos de prueba (por defecto <out>/graphs_jammed.jsonl)")

    evaluate = commands.add_parser("evaluate", parents=[common], help="Curvas ROC de series de anormalidad")
    evaluate.add_argument("series", nargs="*", help="Archivos CSV de series de anormalidad")
    evaluate.add_argument("--average", action="store_true", help="Escribe también la ROC media")
    return parser


def run_command(args) -> int:
    config = load_config(args.config).with_overrides(seed=args.seed, output_dir=args.out)
    setup_logging(str(config.log_dir))
    if args.verbose:
        set_log_level(logging.DEBUG)
    logger.info(f"Command '{args.command}' (seed={config.seed}, out={config.output_dir})")

    if args.command == "simulate":
        result = SimulateController.run(config, ngsim_path=args.ngsim)
        for name, path in result["paths"].items():
            print(f"{name}: {path}")
        print(f"Aristas eliminadas durante los ataques: {result['edge_drop_fraction']:.1%}")
        return EXIT_NORMAL

    if args.command == "train":
        path = TrainController.run(config, model_path=args.model)
        print(f"model: {path}")
        return EXIT_NORMAL

    if args.command == "detect":
        code, summary = DetectController.run(
            config, model_path=args.model, scenario_path=args.scenario, graphs_path=args.graphs
        )
        for modality, item in summary["modalities"].items():
            print(f"{modality}: {item['h1_frames']} frames H1 de {item['frames']} (umbral {item['threshold']:.4f})")
        return code

    if args.command == "evaluate":
        rows = EvaluateController.run(args.series, config.output_dir, average=args.average)
        print(EvaluateController.format_table(rows))
        return EXIT_NORMAL

    raise UsageError(f"Comando desconocido: {args.command}")


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return run_command(args)
    except V2XSentinelError as e:
        print(report_error(e, context="línea de comandos"), file=sys.stderr)
        return EXIT_ERROR
    except Exception as e:
        log_exception(logger, e, "línea de comandos")
        print(f"Error inesperado: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
