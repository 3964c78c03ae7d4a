from rich import console, markup, padding
from rich.console import RenderableType

INDENT = "    "
MIN_WIDTH = 100


def format_number(value: float | None, digits: int = 10) -> str:
    if value is None:
        return "-"
    return f"{value:.{digits}g}"


def format_ecp(value: float) -> str:
    # Positive ECP means the controller's share still matters
    style = "passed" if value > 0 else "failed"
    return f"[{style}]{value:+.6f}[/]"


def format_gap(gap: float, tol: float | None = None) -> str:
    text = f"{gap:.1e}"
    if tol is not None and not gap <= tol:
        return f"[failed]{text}[/]"
    return text


def format_check(passed: bool) -> str:
    return "[passed]ok[/]" if passed else "[failed]FAILED[/]"


def format_separator(text: str = "", separator: str = "=", width: int = 80) -> str:
    if not text:
        return f"[separator]{separator * width}[/]"
    title = f" {markup.escape(text)} "
    left = (width - len(text) - 2) // 2
    right = max(width - len(text) - 2 - left, 0)
    return f"[separator]{separator * left}{title}{separator * right}[/]"


def print_separator(out: console.Console, text: str = "", separator: str = "=") -> None:
    out.print(format_separator(text, separator, width=min(MIN_WIDTH, out.width)))


def print_key(out: console.Console, key: str, prefix: str = "") -> None:
    out.print(f"{prefix}[white]{markup.escape(key)}[/]:")


def format_key_value(
    key: str,
    value: str,
    prefix: str = "",
    value_color: str = "value",
) -> str:
    return f"{prefix}[keyname]{markup.escape(key)}[/]: [{value_color}]{markup.escape(value)}[/]"


def print_key_value(
    out: console.Console,
    key: str,
    value: str,
    prefix: str = "",
    value_color: str = "value",
) -> None:
    out.print(format_key_value(key, value, prefix, value_color), highlight=False)


def print_indented(out: console.Console, renderable: RenderableType, level: int = 1) -> None:
    out.print(padding.Padding(renderable, (0, 0, 0, len(INDENT) * level)))
