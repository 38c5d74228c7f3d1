from os import get_terminal_size

from loguru import logger
from rich.console import Console
from rich.markup import escape
from rich.panel import Panel
from rich.table import Table


def terminal_width():
    try:
        return get_terminal_size().columns
    except OSError:
        return 80


WIDTH = min(120, terminal_width() - 10)

console = Console()

print_stdout = True

VERDICT_STYLES = {"pass": "green", "marginal": "yellow", "fail": "red"}


def set_print_stdout(enabled: bool):
    global print_stdout
    print_stdout = enabled


def print_banner(msg: str) -> None:
    if not print_stdout:
        return

    banner = f" {msg} ".center(WIDTH, "=")
    console.print()
    console.print(banner, style="bold")
    console.print()


def _format_value(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    if isinstance(value, complex):
        return f"{value.real:.10g}{value.imag:+.10g}i"
    return escape(str(value))


def print_parameters(title: str, values: dict, desc: str = "") -> None:
    """Render a flat name -> value mapping as a two-column table."""
    if desc:
        title = f"{title} ({desc})"

    table = Table(title=title, title_justify="left", width=min(WIDTH, 80))
    table.add_column("quantity", style="cyan")
    table.add_column("value", justify="right")
    for name, value in values.items():
        table.add_row(escape(str(name)), _format_value(value))

    if not print_stdout:
        logger.debug("{}: {}", title, values)
    else:
        console.print(table)


def print_verdict(verdict: str, ratios: dict[str, float], desc: str = "") -> None:
    style = VERDICT_STYLES.get(verdict, "white")
    body = "\n".join(f"{escape(name)}: {value:.4g}" for name, value in ratios.items())
    title = "Adiabatic elimination validity"
    if desc:
        title = f"{title} ({desc})"

    panel = Panel(
        f"[bold {style}]{verdict.upper()}[/]\n{body}",
        title=title,
        title_align="left",
        border_style=style,
        width=WIDTH,
    )
    if not print_stdout:
        logger.debug("{}: {} {}", title, verdict, ratios)
    else:
        console.print(panel)


def log_and_print(msg):
    logger.info(msg)
    if print_stdout:
        console.print(escape(str(msg)))
