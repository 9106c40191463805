"""Run the tvrank command line."""

import sys

from .cli import main

sys.exit(main())
