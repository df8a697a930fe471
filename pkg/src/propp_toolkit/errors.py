"""
Exception hierarchy for the toolkit.

Everything derives from ValueError so callers that only know about bad
input keep working. InputError means the caller supplied something invalid
(exit code 2 at the CLI); InternalFault means a computation contradicted an
identity it must satisfy.
"""

from typing import Optional


class ProppError(ValueError):
    """Base class for all toolkit errors"""


class InputError(ProppError):
    """Invalid user input: presentation, flags, caps"""


class InternalFault(ProppError):
    """A computed value violated an identity that always holds"""


class PresentationSyntaxError(InputError):
    """Malformed presentation text or structurally invalid relation"""

    def __init__(self, message: str, line: Optional[int] = None, column: Optional[int] = None):
        self.line = line
        self.column = column
        location = ""
        if line is not None:
            location = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(f"{location}{message}")


class InconsistentPresentationError(InputError):
    """A consistency test word collected to two different normal forms"""

    def __init__(self, violations: list):
        self.violations = violations
        first = violations[0]
        super().__init__(
            f"inconsistent presentation: {len(violations)} test word(s) fail, "
            f"first {first.label}: {first.left} != {first.right}"
        )


class TableCapExceededError(InputError):
    """Group too large for the requested materialization"""

    def __init__(self, order: int, cap: int, what: str = "multiplication table"):
        self.order = order
        self.cap = cap
        super().__init__(f"{what} cap exceeded: group order {order} > cap {cap}")


class NonNormalSubgroupError(InputError):
    """Quotient requested by a subgroup that is not normal"""

    def __init__(self, element: int, conjugator: int, image: int):
        self.witness = (element, conjugator, image)
        super().__init__(
            f"subgroup is not normal: conjugating element {element} by {conjugator} "
            f"gives {image}, which lies outside the subgroup"
        )


class NotPowerfulError(InputError):
    """Operation only defined for powerful groups"""


class NotAnInvolutionError(InputError):
    """Matrix does not square to the identity, or p = 2"""


class InvolutionRelationError(InputError):
    """Generator images do not respect a defining relation"""

    def __init__(self, relation: str, left, right):
        self.relation = relation
        super().__init__(f"sigma does not respect relation {relation}: {left} != {right}")


class InvolutionNotBijectiveError(InputError):
    """Generator images define a non-surjective endomorphism"""


class InvolutionOrderError(InputError):
    """sigma composed with itself is not the identity"""

    def __init__(self, element, image):
        self.witness = (element, image)
        super().__init__(f"sigma has order greater than 2: sigma(sigma({element})) = {image}")


class InvalidTateModuleError(InputError):
    """Action matrix does not define an automorphism of the right order"""


class MissingPremiseError(InputError):
    """A verdict rule needs a premise that was not declared"""


class ContradictoryPremisesError(InputError):
    """Declared premises cannot hold together"""


class CohomologyInconsistencyError(InternalFault):
    """A dimension difference that must be non-negative came out negative"""


class ComputationTooLargeError(InputError):
    """A computation within its cap still did not fit in memory"""

    def __init__(self, order: int, what: str):
        self.order = order
        super().__init__(f"{what} for group order {order} does not fit in memory; lower the cap")
