# Test collection wiring: the test modules import helpers with
# ``from base import ...`` (as when run from this directory via
# run_tests.py), so make this directory importable under pytest.
import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
