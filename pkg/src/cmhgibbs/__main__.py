import sys

from cmhgibbs.cli import main

sys.exit(main())
