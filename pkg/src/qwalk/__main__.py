import sys

from qwalk.cli import main

sys.exit(main())
