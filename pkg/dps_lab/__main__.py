"""Entry point for `python -m dps_lab`"""

import sys

from .cli import main

sys.exit(main())
