"""``python -m apac``."""
import sys

from .cli import main

sys.exit(main())
