"""Cross-lingual POS projection toolkit.

EM word alignment, confidence-filtered tag projection with token/type
constraints, multi-source voting calibration, and a NULL-masked BiLSTM
tagger, backed by the C++ core in ``crosstag._core``.
"""

from crosstag._core import *  # noqa: F401,F403
from crosstag._core import __version__  # noqa: F401
