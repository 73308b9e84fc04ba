import sys
from pathlib import Path

# the parity suite reuses the synthetic fixture generator shipped with
# the primary package's tests
sys.path.insert(0, str(Path(__file__).resolve().parents[2] / "tests"))
