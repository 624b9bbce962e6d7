"""In-memory model of the SVG subset used for templates and final figures.

The subset is deliberately small: seven element kinds, a whitelisted
attribute set per kind, and transforms limited to `translate(tx,ty)` and
`scale(s)` compositions. Numeric values, colors, transforms, and path data
are canonicalized at construction time, so structural equality of trees is
exact string equality of attributes and serialization is deterministic.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

GROUP = "g"
RECT = "rect"
CIRCLE = "circle"
LINE = "line"
PATH = "path"
TEXT = "text"
IMAGE = "image"

KINDS = (GROUP, RECT, CIRCLE, LINE, PATH, TEXT, IMAGE)

_COMMON = ("id", "class", "transform")
KIND_ATTRS: dict[str, frozenset[str]] = {
    GROUP: frozenset(_COMMON + ("data-af", "fill", "stroke", "stroke-width")),
    RECT: frozenset(_COMMON + ("x", "y", "width", "height", "fill", "stroke", "stroke-width")),
    CIRCLE: frozenset(_COMMON + ("cx", "cy", "r", "fill", "stroke", "stroke-width")),
    LINE: frozenset(_COMMON + ("x1", "y1", "x2", "y2", "stroke", "stroke-width")),
    PATH: frozenset(_COMMON + ("d", "fill", "stroke", "stroke-width")),
    TEXT: frozenset(_COMMON + ("x", "y", "font-size", "font-family", "fill")),
    IMAGE: frozenset(_COMMON + ("x", "y", "width", "height", "href")),
}
SVG_ATTRS = frozenset(("xmlns", "viewBox", "width", "height"))

NUMERIC_ATTRS = frozenset(
    ("x", "y", "width", "height", "cx", "cy", "r", "x1", "y1", "x2", "y2",
     "stroke-width", "font-size")
)
COLOR_ATTRS = frozenset(("fill", "stroke"))

# The only color keywords the engine understands; everything else must be hex.
COLOR_KEYWORDS = frozenset(
    {
        "black",
        "white",
        "gray",
        "grey",
        "red",
        "green",
        "blue",
        "yellow",
        "orange",
        "purple",
        "cyan",
        "magenta",
    }
)
_HEX6 = re.compile(r"^#[0-9a-f]{6}$")
_HEX3 = re.compile(r"^#[0-9a-f]{3}$")


def fmt_num(value: float) -> str:
    """Canonical decimal form: at most 3 decimal places, no trailing zeros.

    Rounding is half-away-from-zero applied to value*1000, computed the same
    way in every implementation of this format, so serializations never
    disagree across languages over a tie.
    """
    scaled = abs(value) * 1000.0
    i = math.floor(scaled + 0.5)
    if value < 0:
        i = -i
    if i == 0:
        return "0"
    sign = "-" if i < 0 else ""
    i = abs(i)
    whole, frac = divmod(i, 1000)
    if frac == 0:
        return f"{sign}{whole}"
    frac_s = f"{frac:03d}".rstrip("0")
    return f"{sign}{whole}.{frac_s}"


def parse_number(raw: str) -> float:
    try:
        v = float(raw)
    except ValueError:
        raise ValueError(f"not a number: {raw!r}") from None
    if not math.isfinite(v):
        raise ValueError(f"number not finite: {raw!r}")
    return v


def canon_color(raw: str) -> str:
    """Normalize a paint value: lowercase hex (#rgb expanded), 'none', or a
    plain keyword."""
    v = raw.strip().lower()
    if v == "none" or v in COLOR_KEYWORDS:
        return v
    if _HEX6.match(v):
        return v
    if _HEX3.match(v):
        return "#" + "".join(ch * 2 for ch in v[1:])
    raise ValueError(f"unsupported color: {raw!r}")


# -- transforms ---------------------------------------------------------------
# An op list is [("translate", tx, ty)] / [("scale", s)] compositions applied
# left to right (leftmost outermost). The composed form (s, tx, ty) maps a
# point p to s*p + (tx, ty).

Affine = tuple[float, float, float]
IDENTITY: Affine = (1.0, 0.0, 0.0)

_TRANSFORM_RE = re.compile(r"\s*([a-zA-Z]+)\s*\(([^)]*)\)")


def parse_transform(text: str) -> list[tuple]:
    ops: list[tuple] = []
    pos = 0
    while pos < len(text):
        m = _TRANSFORM_RE.match(text, pos)
        if not m:
            if text[pos:].strip():
                raise ValueError(f"bad transform syntax at {text[pos:]!r}")
            break
        name, args_raw = m.group(1), m.group(2)
        args = [parse_number(a) for a in re.split(r"[\s,]+", args_raw.strip()) if a]
        if name == "translate":
            if len(args) == 1:
                args.append(0.0)
            if len(args) != 2:
                raise ValueError("translate takes 1 or 2 arguments")
            ops.append(("translate", args[0], args[1]))
        elif name == "scale":
            if len(args) == 2 and args[0] == args[1]:
                args = args[:1]
            if len(args) != 1:
                raise ValueError("only uniform scale(s) is supported")
            ops.append(("scale", args[0]))
        else:
            raise ValueError(f"unsupported transform {name!r}")
        pos = m.end()
    return ops


def format_transform(ops: list[tuple]) -> str:
    parts = []
    for op in ops:
        if op[0] == "translate":
            parts.append(f"translate({fmt_num(op[1])},{fmt_num(op[2])})")
        else:
            parts.append(f"scale({fmt_num(op[1])})")
    return " ".join(parts)


def compose_ops(ops: list[tuple]) -> Affine:
    s, tx, ty = IDENTITY
    for op in ops:
        if op[0] == "translate":
            tx += s * op[1]
            ty += s * op[2]
        else:
            s *= op[1]
    return (s, tx, ty)


def compose(outer: Affine, inner: Affine) -> Affine:
    """outer∘inner: apply inner first, then outer."""
    so, txo, tyo = outer
    si, txi, tyi = inner
    return (so * si, so * txi + txo, so * tyi + tyo)


def apply_affine(t: Affine, x: float, y: float) -> tuple[float, float]:
    s, tx, ty = t
    return (s * x + tx, s * y + ty)


# -- path data ----------------------------------------------------------------

_ARITY = {"M": 2, "L": 2, "C": 6, "Z": 0}
_PATH_TOKEN = re.compile(r"[MLCZmlcz]|-?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?")


def parse_path_d(raw: str) -> list[tuple[str, list[float]]]:
    """Parse path data to explicit absolute commands.

    Only M/L/C/Z are supported; implicit repetition is expanded (repeated
    coordinates after M continue as L, per SVG).
    """
    tokens = _PATH_TOKEN.findall(raw)
    if "".join(_PATH_TOKEN.sub("", raw).split()).replace(",", ""):
        raise ValueError(f"bad path data: {raw!r}")
    commands: list[tuple[str, list[float]]] = []
    i = 0
    while i < len(tokens):
        cmd = tokens[i]
        if cmd.isalpha():
            if cmd in "mlcz":
                raise ValueError(f"relative path command {cmd!r} not supported")
            if cmd not in _ARITY:
                raise ValueError(f"unsupported path command {cmd!r}")
            i += 1
        else:
            # Implicit repetition of the previous command.
            if not commands:
                raise ValueError("path data must start with a command")
            cmd = commands[-1][0]
            cmd = "L" if cmd == "M" else cmd
            if cmd == "Z":
                raise ValueError("coordinates after Z")
        arity = _ARITY[cmd]
        args = []
        for _ in range(arity):
            if i >= len(tokens) or tokens[i].isalpha():
                raise ValueError(f"path command {cmd} expects {arity} numbers")
            v = parse_number(tokens[i])
            args.append(v)
            i += 1
        commands.append((cmd, args))
    if not commands or commands[0][0] != "M":
        raise ValueError("path data must start with M")
    return commands


def format_path_d(commands: list[tuple[str, list[float]]]) -> str:
    parts = []
    for cmd, args in commands:
        parts.append(cmd)
        parts.extend(fmt_num(a) for a in args)
    return " ".join(parts)


def canon_path_d(raw: str) -> str:
    return format_path_d(parse_path_d(raw))


def canon_attr(kind: str, name: str, value) -> str:
    """Canonicalize one attribute value for storage."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if name in NUMERIC_ATTRS:
            return fmt_num(float(value))
        value = str(value)
    if name in NUMERIC_ATTRS:
        return fmt_num(parse_number(value))
    if name in COLOR_ATTRS:
        return canon_color(value)
    if name == "transform":
        return format_transform(parse_transform(value))
    if name == "d":
        return canon_path_d(value)
    return value


@dataclass
class SvgNode:
    kind: str
    attrs: dict[str, str] = field(default_factory=dict)
    children: list["SvgNode"] = field(default_factory=list)
    text: str = ""

    @staticmethod
    def make(kind: str, attrs: dict | None = None, children: list["SvgNode"] | None = None,
             text: str = "") -> "SvgNode":
        """Construct a node, canonicalizing values and checking attr names."""
        if kind not in KINDS:
            raise ValueError(f"unknown element kind {kind!r}")
        clean: dict[str, str] = {}
        for name, value in (attrs or {}).items():
            if name not in KIND_ATTRS[kind]:
                raise ValueError(f"attribute {name!r} not allowed on <{kind}>")
            clean[name] = canon_attr(kind, name, value)
        return SvgNode(kind, clean, children or [], text)

    @property
    def id(self) -> str | None:
        return self.attrs.get("id")

    def num(self, name: str, default: float = 0.0) -> float:
        raw = self.attrs.get(name)
        return default if raw is None else parse_number(raw)

    def transform_ops(self) -> list[tuple]:
        raw = self.attrs.get("transform")
        return parse_transform(raw) if raw else []

    def local_affine(self) -> Affine:
        return compose_ops(self.transform_ops())

    def walk(self):
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class SvgDocument:
    view_box: tuple[float, float, float, float]
    children: list[SvgNode] = field(default_factory=list)
    extra_attrs: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        _, _, w, h = self.view_box
        if not (w > 0 and h > 0):
            raise ValueError("view box width and height must be positive")

    @property
    def diagonal(self) -> float:
        return math.hypot(self.view_box[2], self.view_box[3])

    def iter_nodes(self):
        for child in self.children:
            yield from child.walk()

    def find_by_id(self, node_id: str) -> SvgNode | None:
        for node in self.iter_nodes():
            if node.id == node_id:
                return node
        return None

    def view_box_str(self) -> str:
        return " ".join(fmt_num(v) for v in self.view_box)
