"""Free groups, Stallings graphs, Schreier actions and isoperimetry over F(S)."""

from .words import Alphabet
from .subgroups import SubgroupHandle, from_generators
from .schreier import SchreierView

__all__ = ["Alphabet", "SubgroupHandle", "SchreierView", "from_generators"]
__version__ = "0.1.0"
