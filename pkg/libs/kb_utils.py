import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path

from .formula_parser import parse_formula
from .logic import MAX_UNIVERSE, TRUE, Formula, FormulaSyntaxError, KnowledgeProfile

logger = logging.getLogger(__name__)


def setup_logging(debug: bool = False) -> None:
    """Configure the root logger."""
    level = logging.DEBUG if debug else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )


SECTION_HEADER = re.compile(r"^\[([A-Za-z]+)\]$")
SECTIONS = ("kb", "upper", "lower", "query")


class ProblemFileError(Exception):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


@dataclass(frozen=True)
class ProblemFile:
    bases: tuple[Formula, ...]
    upper: Formula = TRUE
    lower: Formula = TRUE
    query: Formula | None = None

    def profile(self, cap: int = MAX_UNIVERSE) -> KnowledgeProfile:
        return KnowledgeProfile(self.bases, self.upper, self.lower, cap=cap)


def _parse_section(name: str, header_line: int, body: list[str]) -> Formula:
    if not any(line.strip() for line in body):
        raise ProblemFileError(f"empty [{name}] section", header_line)
    try:
        return parse_formula("\n".join(body))
    except FormulaSyntaxError as exc:
        raise ProblemFileError(exc.reason, header_line + exc.line) from exc


def parse_problem(text: str) -> ProblemFile:
    """
    Parse a problem document: `[kb]` sections (one or more), optional
    `[upper]`, `[lower]` and `[query]`, one formula per section body.
    Lines starting with `#` are comments.
    """
    sections: list[tuple[str, int, list[str]]] = []
    for number, raw in enumerate(text.splitlines(), 1):
        stripped = raw.strip()
        header = SECTION_HEADER.match(stripped)
        if header:
            name = header.group(1).lower()
            if name not in SECTIONS:
                raise ProblemFileError(f"unknown section [{header.group(1)}]", number)
            sections.append((name, number, []))
        elif stripped.startswith("#"):
            if sections:
                sections[-1][2].append("")
        elif not sections:
            if stripped:
                raise ProblemFileError("text before the first section header", number)
        else:
            sections[-1][2].append(raw)

    bases, single = [], {}
    for name, number, body in sections:
        formula = _parse_section(name, number, body)
        if name == "kb":
            bases.append(formula)
        elif name in single:
            raise ProblemFileError(f"duplicate [{name}] section", number)
        else:
            single[name] = formula
    if not bases:
        raise ProblemFileError("no [kb] section")
    return ProblemFile(tuple(bases), single.get("upper", TRUE), single.get("lower", TRUE), single.get("query"))


def load_problem(path: Path) -> ProblemFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemFileError(f"cannot read {path}: {exc}") from exc
    logger.debug("Loaded problem file %s", path)
    return parse_problem(text)


def load_config(path: Path) -> dict:
    """JSON engine settings; a missing file means no settings."""
    path = Path(path)
    if not path.exists():
        return {}
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"invalid JSON in {path}: {exc.msg}", exc.lineno) from exc
    if not isinstance(data, dict):
        raise ProblemFileError(f"{path} must hold a JSON object")
    return data


def save_report(path: Path, lines: list[str]) -> None:
    """Write report lines atomically."""
    path = Path(path)
    temp = path.with_suffix(path.suffix + ".tmp")
    temp.write_text("\n".join(lines) + "\n", encoding="utf-8")
    temp.replace(path)
