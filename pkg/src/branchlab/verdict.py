"""Three-valued answers for semi-decidable questions."""

from __future__ import annotations

import copy
import enum
from dataclasses import dataclass, field
from typing import Any, Optional


class Status(enum.Enum):
    PROVED = "proved"
    REFUTED = "refuted"
    UNKNOWN = "unknown"

    def __str__(self):
        return self.value


class MalformedCertificate(ValueError):
    """A certificate failed to replay."""


@dataclass(frozen=True)
class Verdict:
    """Proved/Refuted always carry a certificate; Unknown always carries the bound reached.

    Certificates are plain dicts of strings, ints and lists so that they can
    be serialized and replayed by :mod:`branchlab.certify`. ``evidence`` holds
    data that is reported but proves nothing (quotient traces and the like).
    """

    status: Status
    certificate: Optional[dict] = None
    bound: Optional[dict] = None
    evidence: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.status is Status.UNKNOWN:
            if not self.bound:
                raise ValueError("an Unknown verdict must name the bound reached")
        elif not self.certificate:
            raise ValueError(f"a {self.status} verdict needs a certificate")

    @classmethod
    def proved(cls, certificate: dict, **evidence: Any) -> "Verdict":
        return cls(Status.PROVED, certificate, None, evidence)

    @classmethod
    def refuted(cls, certificate: dict, **evidence: Any) -> "Verdict":
        return cls(Status.REFUTED, certificate, None, evidence)

    @classmethod
    def unknown(cls, bound: dict, certificate: Optional[dict] = None, **evidence: Any) -> "Verdict":
        return cls(Status.UNKNOWN, certificate, bound, evidence)

    @property
    def is_proved(self) -> bool:
        return self.status is Status.PROVED

    @property
    def is_refuted(self) -> bool:
        return self.status is Status.REFUTED

    @property
    def is_unknown(self) -> bool:
        return self.status is Status.UNKNOWN

    def as_dict(self) -> dict:
        """A deep copy, so that edits to a report never reach cached verdicts."""
        out = {"status": self.status.value}
        if self.certificate is not None:
            out["certificate"] = self.certificate
        if self.bound is not None:
            out["bound"] = self.bound
        if self.evidence:
            out["evidence"] = self.evidence
        return copy.deepcopy(out)
