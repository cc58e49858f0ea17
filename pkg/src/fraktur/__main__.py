import sys

from fraktur.cli import main

sys.exit(main())
