"""
JSON reports written to stdout

Blocks are optional; a command fills only the ones it computes. Key order
follows field order and every number is an exact integer, so a report is
byte-stable for fixed inputs.
"""

import json
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field

from ..core.cohomology import CohomologyReport
from ..core.involution import EigenSplit
from ..core.verdicts import FmVerdict
from ..core.verification import SuiteSummary

SCHEMA_VERSION = 1


class StructureBlock(BaseModel):
    order: int
    order_exponent: int
    d: int
    d_plus: Optional[int] = None
    d_minus: Optional[int] = None
    powerful: Optional[bool] = None
    abelian: Optional[bool] = None
    layer_ranks: List[int] = Field(default_factory=list)
    layer_splits: List[EigenSplit] = Field(default_factory=list)
    layer_regular_depth: Optional[int] = None
    uniform_quotient_candidate: Optional[bool] = None
    powerful_witness: Optional[List[int]] = None
    validation_level: Optional[str] = None


class MetaBlock(BaseModel):
    caps: Dict[str, int] = Field(default_factory=dict)
    seed: Optional[int] = None
    timings: Optional[Dict[str, float]] = None


class JsonReport(BaseModel):
    schema_version: int = SCHEMA_VERSION
    command: str
    structure: Optional[StructureBlock] = None
    cohomology: Optional[CohomologyReport] = None
    verdict: Optional[FmVerdict] = None
    verification: Optional[SuiteSummary] = None
    meta: MetaBlock = Field(default_factory=MetaBlock)
    echo: Optional[str] = None

    def to_json(self) -> str:
        payload: Dict[str, Any] = self.model_dump(mode="json", exclude_none=True)
        return json.dumps(payload, indent=2, ensure_ascii=False)
