"""Byte-deterministic structured-text reports.

Schema: an optional preamble of ``key = value`` lines, then any number
of ``[section]`` blocks each holding ``key = value`` lines. Sections
are separated by exactly one blank line. Values are single-line
strings; floats are rendered at 6 significant digits. The same report
always serializes to the same bytes.
"""

from dataclasses import dataclass, field

from .errors import InputError

__all__ = ["ReportDoc", "fmt", "pct", "render_report", "parse_report", "write_report"]


@dataclass
class ReportDoc:
    """Ordered sections of ordered key/value pairs; None = preamble."""

    sections: list = field(default_factory=list)

    def add_section(self, name):
        pairs = []
        self.sections.append((name, pairs))
        return pairs

    def put(self, name, key, value):
        for sec_name, pairs in self.sections:
            if sec_name == name:
                pairs.append((key, str(value)))
                return
        self.add_section(name).append((key, str(value)))


def fmt(x: float) -> str:
    """Fixed 6-significant-digit rendering."""
    return format(float(x), ".6g")


def pct(x: float) -> str:
    """Percentage with two decimals, the style of the human summary."""
    return f"{100.0 * float(x):.2f}"


def render_report(doc: ReportDoc) -> str:
    chunks = []
    for name, pairs in doc.sections:
        lines = [] if name is None else [f"[{name}]"]
        for key, value in pairs:
            if "\n" in value or " = " in key:
                raise InputError(f"report value for {key!r} is not single-line safe")
            lines.append(f"{key} = {value}")
        chunks.append("\n".join(lines))
    return "\n\n".join(chunks) + "\n"


def parse_report(text: str) -> ReportDoc:
    doc = ReportDoc()
    pairs = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("[") and line.endswith("]"):
            pairs = doc.add_section(line[1:-1])
            continue
        if " = " not in line:
            raise InputError(f"report line {lineno} is neither a section nor key = value")
        key, value = line.split(" = ", 1)
        if pairs is None:
            pairs = doc.add_section(None)
        pairs.append((key, value))
    return doc


def write_report(doc: ReportDoc, path) -> None:
    with open(path, "w") as fh:
        fh.write(render_report(doc))
