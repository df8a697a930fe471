"""
Presentation files

    # extraspecial group of order 27, exponent 3
    prime: 3
    ngens: 3
    comm 2 1: g3
    sigma: g1^-1, g2^-1, g3

``power i: <word>`` gives g_i^p, ``comm j i: <word>`` gives [g_j, g_i] with
j > i; omitted relations are trivial. Words are space separated tokens
``g<k>`` or ``g<k>^<e>``; an empty word (or ``1``) is the identity. Sigma
words may use negative exponents and any generator order.
"""

import re
from typing import Dict, List, NamedTuple, Optional, Tuple

import structlog

from ..core.linalg import check_prime
from ..core.pc_engine import PcPresentation, Word
from ..errors import InputError, PresentationSyntaxError

logger = structlog.get_logger(__name__)

_TOKEN = re.compile(r"g(\d+)(?:\^(-?\d+))?$")
_HEADER = re.compile(r"(prime|ngens|power|comm|sigma)\b\s*([^:]*):(.*)$")


class PresentationFile(NamedTuple):
    presentation: PcPresentation
    sigma: Optional[List[Word]]


def _parse_word(
    text: str,
    line: int,
    column: int,
    ngens: int,
    allow_negative: bool,
    above: Optional[int] = None,
    p: Optional[int] = None,
) -> Word:
    """
    Tokens g<k> or g<k>^<e>, or 1 for the identity.

    Relation words (``above`` set) must be normal: generators strictly
    increasing past g_{above+1}, exponents in [0, p).
    """
    word = []
    offset = 0
    last = above
    for token in text.split():
        offset = text.index(token, offset)
        col = column + offset
        offset += len(token)
        if token == "1":
            continue
        match = _TOKEN.match(token)
        if not match:
            raise PresentationSyntaxError(f"expected g<k> or g<k>^<e>, found '{token}'", line, col)
        gen = int(match.group(1))
        exp = int(match.group(2)) if match.group(2) is not None else 1
        if not 1 <= gen <= ngens:
            raise PresentationSyntaxError(f"generator g{gen} outside g1..g{ngens}", line, col)
        if exp < 0 and not allow_negative:
            raise PresentationSyntaxError(f"negative exponent in relation word: '{token}'", line, col)
        if last is not None and gen - 1 <= last:
            raise PresentationSyntaxError(
                f"relation word must use strictly increasing generators above g{above + 1}, found '{token}'",
                line,
                col,
            )
        if p is not None and exp >= p:
            raise PresentationSyntaxError(f"exponent {exp} outside [0, {p}) in '{token}'", line, col)
        if above is not None:
            last = gen - 1
        word.append((gen - 1, exp))
    return tuple(word)


def _parse_int(text: str, what: str, line: int, column: int) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise PresentationSyntaxError(f"{what} must be an integer, found '{text.strip()}'", line, column)


def parse_presentation(text: str) -> PresentationFile:
    """
    Parse a presentation file.

    Args:
        text: file contents; LF or CRLF line endings

    Returns:
        PresentationFile with the validated presentation and optional sigma words
    """
    entries = []
    for number, raw in enumerate(text.replace("\r\n", "\n").split("\n"), start=1):
        body = raw.split("#", 1)[0].rstrip()
        stripped = body.lstrip()
        if not stripped:
            continue
        indent = len(body) - len(stripped)
        match = _HEADER.match(stripped)
        if not match:
            raise PresentationSyntaxError(f"unrecognized line '{stripped}'", number, indent + 1)
        key, args, value = match.groups()
        value_column = indent + stripped.index(":") + 2
        entries.append((number, indent + 1, key, args.split(), value, value_column))

    scalars: Dict[str, int] = {}
    located: Dict[str, Tuple[int, int]] = {}
    for number, column, key, args, value, value_column in entries:
        if key in ("prime", "ngens"):
            if args:
                raise PresentationSyntaxError(f"'{key}' takes no indices", number, column)
            if key in scalars:
                raise PresentationSyntaxError(f"duplicate '{key}'", number, column)
            scalars[key] = _parse_int(value, key, number, value_column)
            located[key] = (number, value_column)
    for key in ("prime", "ngens"):
        if key not in scalars:
            raise PresentationSyntaxError(f"missing '{key}:' line")
    p, n = scalars["prime"], scalars["ngens"]
    if n < 0:
        raise PresentationSyntaxError(f"ngens must be non-negative, got {n}", *located["ngens"])
    try:
        check_prime(p)
    except InputError as exc:
        raise PresentationSyntaxError(str(exc), *located["prime"]) from exc

    power: List[Word] = [()] * n
    comms: Dict[Tuple[int, int], Word] = {}
    seen = set()
    sigma: Optional[List[Word]] = None
    for number, column, key, args, value, value_column in entries:
        if key == "power":
            if len(args) != 1:
                raise PresentationSyntaxError("expected 'power i: <word>'", number, column)
            i = _parse_int(args[0], "power index", number, column) - 1
            if not 0 <= i < n:
                raise PresentationSyntaxError(f"power index {i + 1} outside 1..{n}", number, column)
            if ("power", i) in seen:
                raise PresentationSyntaxError(f"duplicate power relation for g{i + 1}", number, column)
            seen.add(("power", i))
            power[i] = _parse_word(value, number, value_column, n, allow_negative=False, above=i, p=p)
        elif key == "comm":
            if len(args) != 2:
                raise PresentationSyntaxError("expected 'comm j i: <word>'", number, column)
            j = _parse_int(args[0], "commutator index", number, column) - 1
            i = _parse_int(args[1], "commutator index", number, column) - 1
            if not 0 <= i < j < n:
                raise PresentationSyntaxError(
                    f"commutator indices need {n} >= j > i >= 1, got j={j + 1}, i={i + 1}", number, column
                )
            if ("comm", j, i) in seen:
                raise PresentationSyntaxError(f"duplicate commutator relation [g{j + 1}, g{i + 1}]", number, column)
            seen.add(("comm", j, i))
            comms[(j, i)] = _parse_word(value, number, value_column, n, allow_negative=False, above=j, p=p)
        elif key == "sigma":
            if sigma is not None:
                raise PresentationSyntaxError("duplicate 'sigma' line", number, column)
            parts = value.split(",")
            if len(parts) != n:
                raise PresentationSyntaxError(
                    f"sigma needs {n} comma-separated words, found {len(parts)}", number, value_column
                )
            sigma, offset = [], 0
            for part in parts:
                sigma.append(_parse_word(part, number, value_column + offset, n, allow_negative=True))
                offset += len(part) + 1

    pres = PcPresentation(p, n, tuple(power), comms)
    logger.debug("presentation_parsed", p=p, n=n, sigma=sigma is not None)
    return PresentationFile(pres, sigma)


def format_word(word: Word) -> str:
    if not word:
        return "1"
    return " ".join(f"g{gen + 1}" if exp == 1 else f"g{gen + 1}^{exp}" for gen, exp in word)


def format_presentation(pres: PcPresentation, sigma: Optional[List[Word]] = None) -> str:
    """Canonical text of a presentation; parse_presentation reads it back unchanged"""
    lines = [f"prime: {pres.p}", f"ngens: {pres.n}"]
    for i, word in enumerate(pres.power):
        if word:
            lines.append(f"power {i + 1}: {format_word(word)}")
    for (j, i), word in sorted(pres.commutators.items()):
        lines.append(f"comm {j + 1} {i + 1}: {format_word(word)}")
    if sigma is not None and pres.n:
        lines.append("sigma: " + ", ".join(format_word(tuple(w)) for w in sigma))
    return "\n".join(lines) + "\n"
