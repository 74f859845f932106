import sys

from pynorms.cli import main

sys.exit(main())
