"""Self-similar branch groups: word problem, congruence quotients, subgroup
certificates, leaf systems and Cantor-Bendixson rank classification."""

__version__ = "0.1.0"

from .config import Budget, BudgetExceeded, DEFAULT_BUDGET
from .fgsub import FgSubgroup
from .ssgroup import Element, GroupDef, act, builtin, equals, parse_group, portrait, section
from .tree import LeafSet, Vertex, shadow
from .verdict import MalformedCertificate, Status, Verdict

__all__ = [
    "Budget", "BudgetExceeded", "DEFAULT_BUDGET", "FgSubgroup", "Element", "GroupDef", "act",
    "builtin", "equals", "parse_group", "portrait", "section", "LeafSet", "Vertex", "shadow",
    "MalformedCertificate", "Status", "Verdict",
]
