"""
Командная строка: по подкоманде на каждый тип сценария.

Коды выхода: 0 - проверки пройдены, 1 - проверка не пройдена,
2 - ошибка конфигурации или расчета (в директории результатов failure.json).
"""
from typing import Any, Dict, Optional

import click
from rich.console import Console
from rich.table import Table

from config import DEFAULT_OUTPUT_DIR, DEFAULT_THREADS
from logger_config import setup_logger
from parsers.scenario_parser import ConfigError, Scenario, load_config, parse_config
from usecases.scenario_runner import run_scenario
from utils.io_utils import write_failure

logger = setup_logger("cli")
console = Console()

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2


COMMON_OPTIONS = [
    click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False), help="Файл сценария"),
    click.option("--out", "out_dir", type=click.Path(file_okay=False), help="Директория результатов"),
    click.option("--seed", type=int, help="Зерно генератора случайных чисел"),
    click.option("--threads", type=int, default=DEFAULT_THREADS, show_default=True,
                 help="Потоки BLAS и процессы joblib"),
    click.option("--queue", is_flag=True, help="Отправить сценарий в очередь celery"),
]

STEADY_OPTIONS = [
    click.option("--mass", type=float, help="Масса M"),
    click.option("--potential", type=click.Choice(["free", "harmonic", "quartic", "tabulated"]),
                 help="Внешний потенциал"),
    click.option("--tol", type=float, help="Порог сходимости неподвижной точки"),
]


def _with_options(options):
    def decorator(func):
        for option in reversed(options):
            func = option(func)
        return func
    return decorator


_common_options = _with_options(COMMON_OPTIONS)
_steady_options = _with_options(STEADY_OPTIONS)


def _load(kind: str, config_path: Optional[str], overrides: Dict[str, Any]) -> Scenario:
    scenario = load_config(config_path, kind) if config_path else parse_config("", kind)
    return scenario.with_overrides(overrides)


def _render_checks(result: Dict[str, Any]):
    table = Table(title=f"{result['command']}: проверки")
    table.add_column("Проверка")
    table.add_column("Значение", justify="right")
    table.add_column("Порог", justify="right")
    table.add_column("Итог")
    for c in result["checks"]:
        mark = "[green]OK[/green]" if c["passed"] else "[red]FAIL[/red]"
        limit = "-" if c["limit"] is None else f"{c['limit']:.3g}"
        table.add_row(c["name"], f"{c['value']:.6g}", limit, mark)
    console.print(table)


def _render_invariance(result: Dict[str, Any]):
    table = Table(title="Инвариантность: максимальное расхождение")
    for column in ("Проверка", "|u|", "beta", "h", "max diff"):
        table.add_column(column, justify="right")
    for label, report in result.get("reports", []):
        table.add_row(label, f"{float(sum(report.u ** 2) ** 0.5):.3g}", f"{report.beta:g}",
                      f"{report.h:g}", f"{report.max_discrepancy:.3e}")
    console.print(table)


def _render_oracles(result: Dict[str, Any]):
    frame = result.get("table")
    if frame is None:
        return
    table = Table(title="Эталонные значения")
    for column in ("Интеграл", "Вычислено", "Эталон", "Отн. ошибка", "Итог"):
        table.add_column(column, justify="right")
    for row in frame.to_dict("records"):
        mark = "[green]OK[/green]" if row["pass"] else "[red]FAIL[/red]"
        table.add_row(row["name"], f"{row['computed']:.15g}", f"{row['expected']:.15g}",
                      f"{row['rel_error']:.2e}", mark)
    console.print(table)


def _execute(ctx: click.Context, kind: str, config_path: Optional[str], out_dir: Optional[str],
             seed: Optional[int], threads: int, queue: bool, **steady):
    overrides = {"seed": seed, "output.dir": out_dir}
    overrides.update({
        "mass": steady.get("mass"),
        "potential.kind": steady.get("potential"),
        "steady.tol": steady.get("tol"),
    })
    try:
        scenario = _load(kind, config_path, overrides)
    except (ConfigError, OSError) as e:
        write_failure(out_dir or DEFAULT_OUTPUT_DIR, kind, e, {"config": config_path, "line": getattr(e, "line", None)})
        console.print(f"[red]Ошибка конфигурации:[/red] {str(e)}")
        ctx.exit(EXIT_ERROR)

    if queue:
        from celery_app.tasks.scenario_tasks import run_scenario_task

        task = run_scenario_task.delay(scenario.source, kind, scenario.output.dir, threads,
                                       {key: value for key, value in overrides.items() if value is not None})
        console.print(f"Сценарий {kind} поставлен в очередь: задача {task.id}")
        ctx.exit(EXIT_OK)

    result = run_scenario(scenario, scenario.output.dir, threads)
    if result["status"] == "error":
        console.print(f"[red]Ошибка:[/red] {result['error']}")
        ctx.exit(EXIT_ERROR)

    if kind == "check-invariance":
        _render_invariance(result)
    elif kind == "check-oracles":
        _render_oracles(result)
    _render_checks(result)
    console.print(f"Результаты: {scenario.output.dir}")
    ctx.exit(EXIT_OK if result["passed"] else EXIT_CHECK_FAILED)


@click.group()
def cli():
    """Релятивистская кинетика Фоккера-Планка: прогоны, стационарные состояния и проверки."""


@cli.command("run-linear")
@_common_options
@click.pass_context
def run_linear_command(ctx, **options):
    """Прогон линейного уравнения по времени."""
    _execute(ctx, "run-linear", **options)


@cli.command("steady-linear")
@_common_options
@_steady_options
@click.pass_context
def steady_linear_command(ctx, **options):
    """Дискретное стационарное состояние линейного уравнения."""
    _execute(ctx, "steady-linear", **options)


@cli.command("steady-vmfp")
@_common_options
@_steady_options
@click.pass_context
def steady_vmfp_command(ctx, **options):
    """Стационарное состояние VMFP."""
    _execute(ctx, "steady-vmfp", **options)


@cli.command("steady-vnfp")
@_common_options
@_steady_options
@click.pass_context
def steady_vnfp_command(ctx, **options):
    """Стационарное состояние VNFP."""
    _execute(ctx, "steady-vnfp", **options)


@cli.command("check-invariance")
@_common_options
@click.pass_context
def check_invariance_command(ctx, **options):
    """Лоренцева и галилеева инвариантность операторов."""
    _execute(ctx, "check-invariance", **options)


@cli.command("check-lightcone")
@_common_options
@click.pass_context
def check_lightcone_command(ctx, **options):
    """Носитель решения внутри светового конуса."""
    _execute(ctx, "check-lightcone", **options)


@cli.command("check-oracles")
@_common_options
@click.pass_context
def check_oracles_command(ctx, **options):
    """Импульсные интегралы против замкнутых форм."""
    _execute(ctx, "check-oracles", **options)


if __name__ == "__main__":
    cli()
