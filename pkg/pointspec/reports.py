import json
import logging
import os
from typing import Iterable, List, Optional

import pandas as pd

from .extensions import classify, is_local
from .models import (
    BoundStateSummary, ContinuityExtension, DeltaKind, Extension, ExtensionSummary,
    ReportDocument, TwoPointExtension,
)
from .solver import BoundState

logger = logging.getLogger(__name__)


def summarize_extension(ext: Extension) -> ExtensionSummary:
    """Echo of the extension parameters for the report header"""
    if isinstance(ext, (TwoPointExtension, ContinuityExtension)):
        generator = getattr(ext, "generator", None)
        return ExtensionSummary(
            h=ext.h,
            coupling=ext.coupling.as_rows(),
            local=is_local(ext) if isinstance(ext, TwoPointExtension) else None,
            parity_symmetric=ext.coupling.parity_symmetric,
            kind="two-point" if isinstance(ext, TwoPointExtension) else "continuity",
            classification=classify(ext),
            alpha=generator.alpha if generator else None,
            beta=generator.beta if generator else None,
        )
    kind = ext.kind
    if isinstance(kind, DeltaKind):
        return ExtensionSummary(kind=kind.name, classification=classify(ext), c=kind.c,
                                parity_symmetric=True)
    return ExtensionSummary(kind=kind.name, classification=classify(ext), alpha=kind.alpha,
                            beta=kind.beta, parity_symmetric=True)


def summarize_states(states: Iterable[BoundState]) -> List[BoundStateSummary]:
    return [
        BoundStateSummary(kappa=s.kappa, energy=s.energy, multiplicity=s.multiplicity,
                          parity=None if s.parity == "none" else s.parity)
        for s in states
    ]


class ReportWriter:
    """Writes the JSON report and CSV artifacts of one run"""

    def __init__(self, out: Optional[str] = None, csv_dir: Optional[str] = None):
        self.out = out
        self.csv_dir = csv_dir
        self.artifacts: List[str] = []

    def write_frame(self, frame: pd.DataFrame, name: str) -> Optional[str]:
        """Write a table as <csv_dir>/<name>.csv; no-op without a CSV directory"""
        if self.csv_dir is None:
            return None
        os.makedirs(self.csv_dir, exist_ok=True)
        path = os.path.join(self.csv_dir, f"{name}.csv")
        frame.to_csv(path, index=False, float_format="%.17g")
        self.artifacts.append(path)
        logger.debug("wrote %s (%d rows)", path, len(frame))
        return path

    def render(self, document: ReportDocument) -> str:
        document = document.model_copy(update={"artifacts": list(self.artifacts)})
        # no timestamps: identical runs give identical bytes
        return json.dumps(document.model_dump(by_alias=True, mode="json"), indent=2) + "\n"

    def emit(self, document: ReportDocument) -> str:
        text = self.render(document)
        if self.out is None:
            print(text, end="")
            return text
        directory = os.path.dirname(self.out)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(self.out, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info("report written to %s", self.out)
        return text


def load_report(path: str) -> ReportDocument:
    with open(path, "r", encoding="utf-8") as f:
        return ReportDocument.model_validate(json.load(f))
