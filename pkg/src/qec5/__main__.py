"""``python3 -m qec5``."""
import sys

from .cli import main

sys.exit(main())
