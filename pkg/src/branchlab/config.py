"""Resource budgets shared by every module.

All limits live in one record so that the CLI (and the ``BRANCHLAB_*``
environment variables) can override them in a single place.
"""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass

ENV_PREFIX = "BRANCHLAB_"


@dataclass(frozen=True)
class Budget:
    # deepest level at which level permutations are ever materialized
    max_level_binary: int = 8
    max_level_other: int = 5
    # quotient closures switch from hashing BFS to a stabilizer chain above this
    closure_limit: int = 5000
    # orbit states explored when Schreier generators are sampled lazily
    orbit_limit: int = 50_000
    # bisimulation states explored before equality gives up
    pair_budget: int = 100_000
    # word length (in subgroup generators) explored by membership searches
    witness_depth: int = 12
    # distinct elements kept by one membership search ball
    ball_size: int = 6000
    # largest subgroup order that finiteness enumeration will try to close
    finite_limit: int = 1024
    # levels used for index / order traces
    evidence_level_binary: int = 5
    evidence_level_other: int = 4
    # trailing levels that must strictly grow to count as infinite-index evidence
    growth_window: int = 3
    gn_depth: int = 6
    # deepest level searched for a finite-section vertex
    case_a_level: int = 2
    # deepest level used by independent family construction
    family_level: int = 12
    # largest level searched for a certifying level stabilizer
    certify_level: int = 4

    def max_level(self, alphabet_size: int) -> int:
        return self.max_level_binary if alphabet_size == 2 else self.max_level_other

    def evidence_level(self, alphabet_size: int) -> int:
        return (self.evidence_level_binary if alphabet_size == 2
                else self.evidence_level_other)

    def replace(self, **changes) -> "Budget":
        return dataclasses.replace(self, **changes)

    @classmethod
    def from_env(cls, environ=None, **overrides) -> "Budget":
        """Defaults, then ``BRANCHLAB_<FIELD>`` variables, then explicit overrides."""
        environ = os.environ if environ is None else environ
        values = {}
        for f in dataclasses.fields(cls):
            raw = environ.get(ENV_PREFIX + f.name.upper())
            if raw is not None:
                values[f.name] = int(raw)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)


DEFAULT_BUDGET = Budget()


class BudgetExceeded(RuntimeError):
    """A computation needed more than its configured resource limit."""
