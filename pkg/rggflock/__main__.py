"""Entry point for ``python -m rggflock``."""
import sys

from .cli import main

sys.exit(main())
