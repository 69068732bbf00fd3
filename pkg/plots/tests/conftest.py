import sys
from pathlib import Path

# scripts live one level up and are invoked from there
sys.path.insert(0, str(Path(__file__).resolve().parents[1]))
